//! Grasp evaluation: contact, penetration, stability, diversity and the
//! combined quality index.

pub mod diversity;
pub mod quality;
pub mod sim;
pub mod voxel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MeshSolid, Vec3};
use crate::hand::HandMesh;

pub use diversity::{diversity, kmeans, DEFAULT_CLUSTERS};
pub use quality::{high_quality_ratio, quality_index, threshold_sweep, CurvePoint, QUALITY_WEIGHT};
pub use sim::{simulation_displacement, SimConfig};
pub use voxel::{penetration_volume, penetration_volume_solids, voxel_edge, VOXEL_VOLUME_CM3};

/// True when some hand vertex lies inside the object or within `tau`
/// meters of its surface.
pub fn touches(hand_vertices: &[Vec3], object: &MeshSolid, tau: f64) -> bool {
    let (lo, hi) = object.mesh().bounds();
    let near: Vec<Vec3> = hand_vertices
        .iter()
        .copied()
        .filter(|p| (0..3).all(|k| p[k] >= lo[k] - tau && p[k] <= hi[k] + tau))
        .collect();
    near.iter().any(|&p| object.contains(p)) || near.iter().any(|&p| object.closest_point(p).0 <= tau)
}

/// Percentage of grasps that touch their object.
pub fn contact_ratio(grasps: &[(&HandMesh, &MeshSolid)], tau: f64) -> Result<f64> {
    if grasps.is_empty() {
        return Err(Error::Empty("grasp list"));
    }
    if tau <= 0.0 {
        return Err(Error::InvalidParameter(format!("contact threshold must be positive, got {tau}")));
    }
    let hits = grasps.par_iter().filter(|(h, o)| touches(&h.vertices, o, tau)).count();
    Ok(100.0 * hits as f64 / grasps.len() as f64)
}

/// Per-grasp evaluation row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspMetrics {
    pub contact: bool,
    /// cm³.
    pub penetration_volume: f64,
    /// cm.
    pub displacement: f64,
    pub quality_index: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Percent.
    pub contact_ratio: f64,
    /// Mean over grasps, cm³.
    pub penetration_volume: f64,
    /// Mean over grasps, cm.
    pub grasp_disp: f64,
    /// Nats.
    pub entropy: f64,
    pub cluster_size: f64,
    pub quality_index: f64,
    pub runtime_s: f64,
}

pub fn evaluate_grasp(hand: &HandMesh, object: &MeshSolid, tau: f64, sim: &SimConfig) -> Result<GraspMetrics> {
    let solid = MeshSolid::new(hand.to_trimesh())?;
    let pen = penetration_volume_solids(&solid, object);
    let disp = simulation_displacement(&hand.vertices, object, sim);
    Ok(GraspMetrics {
        contact: touches(&hand.vertices, object, tau),
        penetration_volume: pen,
        displacement: disp,
        quality_index: quality_index(pen, disp, QUALITY_WEIGHT),
    })
}

/// Evaluates every grasp in parallel and aggregates. Diversity clusters
/// the flattened joints into `min(20, n)` groups.
pub fn evaluate(
    grasps: &[(&HandMesh, &MeshSolid)],
    tau: f64,
    sim: &SimConfig,
    seed: u64,
    runtime_s: f64,
) -> Result<(Vec<GraspMetrics>, MetricsReport)> {
    if grasps.is_empty() {
        return Err(Error::Empty("grasp list"));
    }
    let rows = grasps
        .par_iter()
        .map(|(h, o)| evaluate_grasp(h, o, tau, sim))
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    let features: Vec<Vec<f64>> = grasps.iter().map(|(h, _)| h.joints.iter().flatten().copied().collect()).collect();
    let (entropy, cluster_size) = diversity(&features, DEFAULT_CLUSTERS.min(grasps.len()), seed)?;
    let pen = rows.iter().map(|r| r.penetration_volume).sum::<f64>() / n;
    let disp = rows.iter().map(|r| r.displacement).sum::<f64>() / n;
    let report = MetricsReport {
        contact_ratio: 100.0 * rows.iter().filter(|r| r.contact).count() as f64 / n,
        penetration_volume: pen,
        grasp_disp: disp,
        entropy,
        cluster_size,
        quality_index: quality_index(pen, disp, QUALITY_WEIGHT),
        runtime_s,
    };
    Ok((rows, report))
}
