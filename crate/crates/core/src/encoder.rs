//! Set encoders for object clouds and hand parts.

use candle_core::{Device, Tensor};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::hand::{HandTemplate, Part};
use crate::nn::{ParamStore, PointNet};

/// Object point cloud in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point cloud"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("point cloud has non-finite coordinates".into()));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `[1, n, 3]` tensor.
    pub fn to_tensor(&self, store: &ParamStore) -> Result<Tensor> {
        points_tensor(&self.points, store.dtype(), store.device())
    }
}

pub fn points_tensor(points: &[Vec3], dtype: candle_core::DType, device: &Device) -> Result<Tensor> {
    let data: Vec<f64> = points.iter().flatten().copied().collect();
    Ok(Tensor::from_vec(data, (1, points.len(), 3), device)?.to_dtype(dtype)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderId {
    ObjectType,
    ObjectPose,
    Part(usize),
}

/// How the six anatomical parts are merged for a given part count.
/// Every grouping keeps canonical order and puts the palm last when it is
/// its own group.
pub fn part_groups(num_parts: usize) -> Result<Vec<Vec<Part>>> {
    use Part::*;
    let groups = match num_parts {
        6 => vec![vec![Thumb], vec![Index], vec![Middle], vec![Ring], vec![Little], vec![Palm]],
        5 => vec![vec![Thumb], vec![Index], vec![Middle], vec![Ring, Little], vec![Palm]],
        4 => vec![vec![Thumb], vec![Index, Middle], vec![Ring, Little], vec![Palm]],
        3 => vec![vec![Thumb], vec![Index, Middle, Ring, Little], vec![Palm]],
        2 => vec![vec![Thumb, Index, Middle, Ring, Little], vec![Palm]],
        1 => vec![Part::ALL.to_vec()],
        n => return Err(Error::InvalidParameter(format!("part count must be 1..=6, got {n}"))),
    };
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub num_parts: usize,
    /// One network produces both object features.
    pub shared_object_encoder: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { latent_dim: 64, hidden: vec![64, 128], num_parts: 6, shared_object_encoder: false }
    }
}

#[derive(Debug, Clone)]
pub struct Encoders {
    object_type: PointNet,
    object_pose: Option<PointNet>,
    parts: Vec<PointNet>,
    part_vertices: Vec<Vec<u32>>,
    part_index: Vec<Tensor>,
    latent_dim: usize,
}

impl Encoders {
    pub fn new(store: &mut ParamStore, cfg: &EncoderConfig, template: &HandTemplate, rng: &mut ChaCha8Rng) -> Result<Self> {
        let d = cfg.latent_dim;
        let object_type = PointNet::new(store, "enc.object_type", &cfg.hidden, d, rng)?;
        let object_pose = if cfg.shared_object_encoder {
            None
        } else {
            Some(PointNet::new(store, "enc.object_pose", &cfg.hidden, d, rng)?)
        };
        let groups = part_groups(cfg.num_parts)?;
        let mut parts = Vec::new();
        let mut part_vertices = Vec::new();
        let mut part_index = Vec::new();
        for (i, group) in groups.iter().enumerate() {
            parts.push(PointNet::new(store, &format!("enc.part{i}"), &cfg.hidden, d, rng)?);
            let mut idx: Vec<u32> = group.iter().flat_map(|&p| template.parts[p as usize].iter().copied()).collect();
            idx.sort_unstable();
            let n = idx.len();
            part_index.push(Tensor::from_vec(idx.clone(), n, store.device())?);
            part_vertices.push(idx);
        }
        Ok(Self { object_type, object_pose, parts, part_vertices, part_index, latent_dim: d })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// Template vertex indices of each (possibly merged) part.
    pub fn part_vertices(&self) -> &[Vec<u32>] {
        &self.part_vertices
    }

    fn net(&self, id: EncoderId) -> Result<&PointNet> {
        match id {
            EncoderId::ObjectType => Ok(&self.object_type),
            EncoderId::ObjectPose => Ok(self.object_pose.as_ref().unwrap_or(&self.object_type)),
            EncoderId::Part(i) => self
                .parts
                .get(i)
                .ok_or(Error::IndexOutOfRange { index: i, size: self.parts.len() }),
        }
    }

    /// `points [B, n, 3]` to `[B, d]`.
    pub fn encode(&self, id: EncoderId, points: &Tensor) -> Result<Tensor> {
        let (_, n, _) = points.dims3()?;
        if n == 0 {
            return Err(Error::Empty("point set"));
        }
        self.net(id)?.forward(points)
    }

    /// Splits batched hand vertices `[B, V, 3]` into part tensors.
    pub fn split_parts(&self, vertices: &Tensor) -> Result<Vec<Tensor>> {
        self.part_index.iter().map(|idx| Ok(vertices.index_select(idx, 1)?)).collect()
    }

    /// Encodes each part tensor `[B, n_i, 3]` with its own network.
    pub fn encode_part_tensors(&self, parts: &[Tensor]) -> Result<Vec<Tensor>> {
        if parts.len() != self.parts.len() {
            return Err(Error::Arity { what: "hand parts", expected: self.parts.len(), actual: parts.len() });
        }
        parts.iter().enumerate().map(|(i, p)| self.encode(EncoderId::Part(i), p)).collect()
    }

    pub fn encode_pointset(&self, store: &ParamStore, cloud: &[Vec3], id: EncoderId) -> Result<Vec<f64>> {
        if cloud.is_empty() {
            return Err(Error::InvalidInput("cannot encode an empty point set".into()));
        }
        let t = points_tensor(cloud, store.dtype(), store.device())?;
        feature_vec(&self.encode(id, &t)?)
    }

    /// One feature per part; parts must already be centered and in
    /// canonical order.
    pub fn encode_hand_parts(&self, store: &ParamStore, parts: &[Vec<Vec3>]) -> Result<Vec<Vec<f64>>> {
        if parts.len() != self.parts.len() {
            return Err(Error::Arity { what: "hand parts", expected: self.parts.len(), actual: parts.len() });
        }
        parts
            .iter()
            .enumerate()
            .map(|(i, p)| self.encode_pointset(store, p, EncoderId::Part(i)))
            .collect()
    }
}

/// `[1, d]` tensor to a plain vector.
pub fn feature_vec(t: &Tensor) -> Result<Vec<f64>> {
    Ok(t.flatten_all()?.to_dtype(candle_core::DType::F64)?.to_vec1::<f64>()?)
}
