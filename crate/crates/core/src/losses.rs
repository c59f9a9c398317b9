//! Reconstruction, contact and penetration losses and the total objective.

use candle_core::{Tensor, D};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist2, MeshSolid, PointGrid, Vec3};
use crate::hand::{forward_kinematics, HandLayer, HandParams, HandTemplate, POSITION_DIM, POSTURE_DIM};
use crate::ops;

/// Default contact-map threshold, meters.
pub const CONTACT_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub lambda_e: f64,
    pub lambda_m: f64,
    pub lambda_c: f64,
    pub lambda_p: f64,
    pub lambda_h: f64,
    pub lambda_v: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_e: 10.0, lambda_m: -50.0, lambda_c: 1500.0, lambda_p: 5.0, lambda_h: 0.1, lambda_v: 10.0, beta: 0.25 }
    }
}

/// `(L_posture, L_position, L_v, L_R)` for one grasp.
pub fn reconstruction_loss(
    gt: &HandParams,
    pred_posture: &[f64],
    pred_position: &[f64],
    gt_vertices: &[Vec3],
    template: &HandTemplate,
    w: &LossWeights,
) -> Result<(f64, f64, f64, f64)> {
    let pred = HandParams::from_parts(pred_posture, pred_position)?;
    if gt_vertices.len() != template.num_vertices() {
        return Err(Error::Topology { expected: template.num_vertices(), actual: gt_vertices.len() });
    }
    let l2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let l_posture = l2(&gt.posture(), pred_posture);
    let l_position = l2(&gt.position(), pred_position);
    let mesh = forward_kinematics(&pred, template)?;
    let l_v = gt_vertices.iter().zip(&mesh.vertices).map(|(a, b)| dist2(*a, *b)).sum::<f64>().sqrt();
    let l_r = w.lambda_h * (l_posture + l_position) + w.lambda_v * l_v;
    Ok((l_posture, l_position, l_v, l_r))
}

/// Batched reconstruction terms, each averaged over the batch.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub posture: Tensor,
    pub position: Tensor,
    pub vertices: Tensor,
    pub total: Tensor,
    /// Predicted vertices `[B, V, 3]`.
    pub pred_vertices: Tensor,
}

pub fn reconstruction_loss_batch(
    gt_params: &Tensor,
    pred_posture: &Tensor,
    pred_position: &Tensor,
    gt_vertices: &Tensor,
    layer: &HandLayer,
    w: &LossWeights,
) -> Result<Reconstruction> {
    let gt_posture = gt_params.narrow(1, 0, POSTURE_DIM)?;
    let gt_position = gt_params.narrow(1, POSTURE_DIM, POSITION_DIM)?;
    let posture = ops::safe_norm(&ops::sq_norm_last(&pred_posture.sub(&gt_posture)?)?)?.mean_all()?;
    let position = ops::safe_norm(&ops::sq_norm_last(&pred_position.sub(&gt_position)?)?)?.mean_all()?;
    let (pred_vertices, _) = layer.forward(&Tensor::cat(&[pred_posture, pred_position], 1)?)?;
    let diff = gt_vertices.sub(&pred_vertices)?.sqr()?.sum(D::Minus1)?.sum(D::Minus1)?;
    let vertices = ops::safe_norm(&diff)?.mean_all()?;
    let total = posture
        .add(&position)?
        .affine(w.lambda_h, 0.0)?
        .add(&vertices.affine(w.lambda_v, 0.0)?)?;
    Ok(Reconstruction { posture, position, vertices, total, pred_vertices })
}

/// Index sets used by the contact and penetration terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContactSets {
    /// Ground-truth contact map: object point indices.
    pub gt_contact: Vec<usize>,
    /// Predicted contact map: object point indices.
    pub pred_contact: Vec<usize>,
    /// Hand vertices that may touch the object.
    pub candidates: Vec<usize>,
    /// Hand vertices inside the object.
    pub inside: Vec<usize>,
}

/// Object points within `tau` of any hand vertex, ascending.
pub fn contact_map(hand_vertices: &[Vec3], points: &[Vec3], tau: f64) -> Result<Vec<usize>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("contact threshold must be positive, got {tau}")));
    }
    if hand_vertices.is_empty() {
        return Ok(Vec::new());
    }
    let grid = PointGrid::new(hand_vertices, tau);
    Ok((0..points.len()).filter(|&i| grid.any_within(points[i], tau)).collect())
}

/// Hand vertices strictly inside the object, ascending. Vertices outside
/// the object's bounding box are skipped without a ray test.
pub fn inside_vertices(hand_vertices: &[Vec3], solid: &MeshSolid) -> Vec<usize> {
    let (lo, hi) = solid.mesh().bounds();
    (0..hand_vertices.len())
        .filter(|&i| {
            let p = hand_vertices[i];
            (0..3).all(|k| p[k] > lo[k] && p[k] < hi[k]) && solid.contains(p)
        })
        .collect()
}

pub fn compute_contact_sets(
    hand_vertices: &[Vec3],
    gt_contact: &[usize],
    points: &[Vec3],
    solid: &MeshSolid,
    candidates: &[u32],
    tau: f64,
) -> Result<ContactSets> {
    if let Some(&bad) = gt_contact.iter().find(|&&i| i >= points.len()) {
        return Err(Error::IndexOutOfRange { index: bad, size: points.len() });
    }
    let mut gt: Vec<usize> = gt_contact.to_vec();
    gt.sort_unstable();
    gt.dedup();
    let mut cand: Vec<usize> = candidates.iter().map(|&i| i as usize).collect();
    cand.sort_unstable();
    cand.dedup();
    Ok(ContactSets {
        gt_contact: gt,
        pred_contact: contact_map(hand_vertices, points, tau)?,
        candidates: cand,
        inside: inside_vertices(hand_vertices, solid),
    })
}

/// For each ground-truth contact point, the nearest candidate hand vertex.
/// Returns `(hand vertex, object point)` pairs.
pub fn contact_pairs(hand_vertices: &[Vec3], sets: &ContactSets, points: &[Vec3]) -> Vec<(usize, Vec3)> {
    if sets.candidates.is_empty() {
        return Vec::new();
    }
    sets.gt_contact
        .iter()
        .map(|&m| {
            let p = points[m];
            let mut best = (sets.candidates[0], f64::INFINITY);
            for &c in &sets.candidates {
                let d = dist2(hand_vertices[c], p);
                if d < best.1 {
                    best = (c, d);
                }
            }
            (best.0, p)
        })
        .collect()
}

/// For each penetrating vertex, its nearest object point.
pub fn penetration_pairs(hand_vertices: &[Vec3], sets: &ContactSets, grid: &PointGrid) -> Vec<(usize, Vec3)> {
    sets.inside
        .iter()
        .filter_map(|&i| grid.nearest(hand_vertices[i]).map(|(j, _)| (i, grid.points()[j])))
        .collect()
}

/// `(L_c, L_m)`.
pub fn contact_losses(sets: &ContactSets, hand_vertices: &[Vec3], points: &[Vec3]) -> (f64, f64) {
    let l_c = contact_pairs(hand_vertices, sets, points)
        .iter()
        .map(|(i, p)| dist2(hand_vertices[*i], *p).sqrt())
        .sum();
    (l_c, contact_map_consistency(sets))
}

/// `|P_m ∩ P̂_m| / |P_m|`, zero for an empty ground-truth map.
pub fn contact_map_consistency(sets: &ContactSets) -> f64 {
    if sets.gt_contact.is_empty() {
        return 0.0;
    }
    let hits = sets.gt_contact.iter().filter(|i| sets.pred_contact.binary_search(i).is_ok()).count();
    hits as f64 / sets.gt_contact.len() as f64
}

pub fn penetration_loss(sets: &ContactSets, hand_vertices: &[Vec3], grid: &PointGrid) -> f64 {
    penetration_pairs(hand_vertices, sets, grid)
        .iter()
        .map(|(i, p)| dist2(hand_vertices[*i], *p))
        .sum()
}

/// Sum of (optionally squared) distances between gathered rows of
/// `vertices [N, 3]` and fixed targets.
pub fn pair_distance_sum(vertices: &Tensor, pairs: &[(usize, Vec3)], squared: bool) -> Result<Tensor> {
    if pairs.is_empty() {
        return Ok(Tensor::zeros((), vertices.dtype(), vertices.device())?);
    }
    let idx: Vec<u32> = pairs.iter().map(|(i, _)| *i as u32).collect();
    let idx = Tensor::from_vec(idx, pairs.len(), vertices.device())?;
    let targets: Vec<f64> = pairs.iter().flat_map(|(_, p)| *p).collect();
    let targets = Tensor::from_vec(targets, (pairs.len(), 3), vertices.device())?.to_dtype(vertices.dtype())?;
    let sq = ops::sq_norm_last(&vertices.index_select(&idx, 0)?.sub(&targets)?)?;
    let d = if squared { sq } else { ops::safe_norm(&sq)? };
    Ok(d.sum_all()?)
}

/// The scalar components of the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub reconstruction: f64,
    pub codebook: f64,
    pub contact_map: f64,
    pub contact: f64,
    pub penetration: f64,
}

/// `L_R + L_E + λ_m L_m + λ_c L_c + λ_p L_p`.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> Result<f64> {
    for (name, v) in [
        ("L_R", c.reconstruction),
        ("L_E", c.codebook),
        ("L_m", c.contact_map),
        ("L_c", c.contact),
        ("L_p", c.penetration),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite { component: name, value: v });
        }
    }
    Ok(c.reconstruction + c.codebook + w.lambda_m * c.contact_map + w.lambda_c * c.contact + w.lambda_p * c.penetration)
}
