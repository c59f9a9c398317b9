//! Procedural training corpus: parametric objects, oracle grasps and the
//! dataset archive.

mod grasps;
mod io;
mod objects;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};
use crate::hand::{forward_with_layer, HandLayer, HandParams, HandTemplate};

pub use grasps::{make_synthetic_grasp, GraspConfig};
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset, FORMAT_VERSION, MAGIC};
pub use objects::{
    analytic_volume, make_object, ObjectFamily, ObjectShape, ObjectSpec, SyntheticObject, DEFAULT_CLOUD_POINTS,
};

/// Which procedural hand template a dataset was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    #[default]
    Standard,
    Toy,
}

impl TemplateKind {
    pub fn build(self) -> HandTemplate {
        match self {
            Self::Standard => HandTemplate::standard(),
            Self::Toy => HandTemplate::toy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspRecord {
    /// Index into [`Dataset::objects`].
    pub object: usize,
    pub params: HandParams,
    pub vertices: Vec<Vec3>,
}

/// Borrowed view of one training example.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSample<'a> {
    pub object_mesh: &'a TriMesh,
    pub object_cloud: &'a [Vec3],
    pub gt_params: &'a HandParams,
    pub gt_vertices: &'a [Vec3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub template: TemplateKind,
    pub objects: Vec<SyntheticObject>,
    pub grasps: Vec<GraspRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.grasps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grasps.is_empty()
    }

    pub fn sample(&self, i: usize) -> SyntheticSample<'_> {
        let g = &self.grasps[i];
        let o = &self.objects[g.object];
        SyntheticSample { object_mesh: &o.mesh, object_cloud: &o.cloud, gt_params: &g.params, gt_vertices: &g.vertices }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grasps.is_empty() || self.objects.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let v = self.grasps[0].vertices.len();
        for g in &self.grasps {
            if g.object >= self.objects.len() {
                return Err(Error::IndexOutOfRange { index: g.object, size: self.objects.len() });
            }
            if g.vertices.len() != v {
                return Err(Error::Topology { expected: v, actual: g.vertices.len() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatagenConfig {
    pub objects: usize,
    pub grasps_per_object: usize,
    pub cloud_points: usize,
    pub seed: u64,
    pub template: TemplateKind,
    pub families: Vec<ObjectFamily>,
    pub min_extent: f64,
    pub max_extent: f64,
    pub grasp: GraspConfig,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        Self {
            objects: 64,
            grasps_per_object: 8,
            cloud_points: DEFAULT_CLOUD_POINTS,
            seed: 0,
            template: TemplateKind::Standard,
            families: ObjectFamily::ALL.to_vec(),
            min_extent: 0.03,
            max_extent: 0.12,
            grasp: GraspConfig::default(),
        }
    }
}

/// SplitMix64 step, used to derive independent child seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the corpus. Objects cycle through `families`; each object and
/// grasp draws from its own derived seed, so the output does not depend on
/// thread scheduling.
pub fn generate_corpus(cfg: &DatagenConfig) -> Result<Dataset> {
    if cfg.objects == 0 || cfg.grasps_per_object == 0 {
        return Err(Error::Empty("corpus"));
    }
    if cfg.families.is_empty() {
        return Err(Error::Config("no object families selected".into()));
    }
    let template = cfg.template.build();
    let layer = HandLayer::new(&template, candle_core::DType::F64, &candle_core::Device::Cpu)?;
    let per_object = (0..cfg.objects)
        .into_par_iter()
        .map(|i| {
            let spec = ObjectSpec {
                family: cfg.families[i % cfg.families.len()],
                min_extent: cfg.min_extent,
                max_extent: cfg.max_extent,
            };
            let object_seed = derive_seed(cfg.seed, i as u64);
            let object = make_object(&spec, object_seed, cfg.cloud_points)?;
            let solid = object.solid()?;
            let grasps = (0..cfg.grasps_per_object)
                .map(|j| {
                    let params = make_synthetic_grasp(&solid, &layer, &template, &cfg.grasp, derive_seed(object_seed, j as u64))?;
                    let vertices = forward_with_layer(&params, &layer)?.vertices;
                    Ok(GraspRecord { object: i, params, vertices })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((object, grasps))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut objects = Vec::with_capacity(cfg.objects);
    let mut grasps = Vec::with_capacity(cfg.objects * cfg.grasps_per_object);
    for (o, g) in per_object {
        objects.push(o);
        grasps.extend(g);
    }
    Ok(Dataset { template: cfg.template, objects, grasps })
}
