use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, cross, mat_vec, matrix_axis_angle, normalize, scale, sub, MeshSolid, Vec3};
use crate::hand::{forward_with_layer, HandLayer, HandMesh, HandParams, HandTemplate, NUM_PARTS, SHAPE_DIM};
use crate::losses::{inside_vertices, CONTACT_THRESHOLD};
use crate::metrics::{penetration_volume_solids, touches};

/// Center of the palm surface in the rest frame.
const PALM_CENTER: Vec3 = [0.0, 0.05, -0.014];
/// Relative flexion of the three joints of a finger.
const CURL_PROFILE: [f64; 3] = [0.8, 1.0, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraspConfig {
    pub max_attempts: usize,
    /// Contact threshold, meters.
    pub tau: f64,
    /// Largest accepted hand-object intersection, cm³.
    pub max_penetration: f64,
    pub shape_std: f64,
    /// Per-step increment of the finger closing sweep, radians.
    pub curl_step: f64,
    pub max_curl: f64,
    /// Gap left between palm and object after the approach search, meters.
    pub standoff: f64,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            max_attempts: 20,
            tau: CONTACT_THRESHOLD,
            max_penetration: 1.0,
            shape_std: 0.5,
            curl_step: 0.05,
            max_curl: 1.6,
            standoff: 5e-4,
        }
    }
}

fn posed(shape: &[f64; SHAPE_DIM], curls: &[f64; 5], rotation: Vec3, translation: Vec3, template: &HandTemplate) -> HandParams {
    let mut p = HandParams { shape: *shape, rotation, translation, ..HandParams::default() };
    for (f, &c) in curls.iter().enumerate() {
        for (k, w) in CURL_PROFILE.iter().enumerate() {
            let slot = 3 * f + k;
            let axis = template.flex_axes[slot];
            p.pose[3 * slot..3 * slot + 3].copy_from_slice(&scale(axis, c * w));
        }
    }
    p
}

/// Hand rotation putting the palm normal on `-approach` and the fingers on
/// `up`.
fn orientation(approach: Vec3, up: Vec3) -> Vec3 {
    let x = cross(up, approach);
    // columns are the images of the rest axes
    let m = [[x[0], up[0], approach[0]], [x[1], up[1], approach[1]], [x[2], up[2], approach[2]]];
    matrix_axis_angle(&m)
}

fn any_inside(mesh: &HandMesh, object: &MeshSolid) -> bool {
    !inside_vertices(&mesh.vertices, object).is_empty()
}

/// One attempt: approach along a random direction until the palm meets the
/// object, then close every finger until it would enter the object.
fn attempt(
    object: &MeshSolid,
    layer: &HandLayer,
    template: &HandTemplate,
    cfg: &GraspConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<HandParams>> {
    let approach: Vec3 = UnitSphere.sample(rng);
    let helper = if approach[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let e1 = normalize(cross(approach, helper));
    let e2 = cross(approach, e1);
    let roll = rng.random_range(0.0..std::f64::consts::TAU);
    let up = add(scale(e1, roll.cos()), scale(e2, roll.sin()));
    let rotation = orientation(approach, up);
    let rot = crate::geometry::axis_angle_matrix(rotation);

    let normal = Normal::new(0.0, cfg.shape_std.max(1e-12)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut shape = [0.0; SHAPE_DIM];
    for s in &mut shape {
        *s = if cfg.shape_std > 0.0 { normal.sample(rng).clamp(-2.0, 2.0) } else { 0.0 };
    }
    let mut curls = [0.0; 5];
    for c in &mut curls {
        *c = rng.random_range(0.05..0.35);
    }

    let (lo, hi) = object.mesh().bounds();
    let center = scale(add(lo, hi), 0.5);
    let radius = 0.5 * crate::geometry::norm(sub(hi, lo));
    let palm = mat_vec(&rot, PALM_CENTER);
    let place = |s: f64| sub(add(center, scale(approach, s)), palm);
    let at = |s: f64, curls: &[f64; 5]| forward_with_layer(&posed(&shape, curls, rotation, place(s), template), layer);

    let (mut s_in, mut s_out) = (0.0, radius + 0.05);
    if any_inside(&at(s_out, &curls)?, object) {
        return Ok(None);
    }
    for _ in 0..30 {
        let mid = 0.5 * (s_in + s_out);
        if any_inside(&at(mid, &curls)?, object) {
            s_in = mid;
        } else {
            s_out = mid;
        }
    }
    let s = s_out + cfg.standoff;
    if any_inside(&at(s, &curls)?, object) {
        return Ok(None);
    }

    let mut active = [true; 5];
    while active.iter().any(|&a| a) {
        let mut trial = curls;
        for f in 0..5 {
            if active[f] {
                trial[f] = (curls[f] + cfg.curl_step).min(cfg.max_curl);
            }
        }
        let mesh = at(s, &trial)?;
        let inside = inside_vertices(&mesh.vertices, object);
        for f in 0..5 {
            if !active[f] {
                continue;
            }
            let blocked = template.parts[f].iter().any(|&v| inside.binary_search(&(v as usize)).is_ok());
            if blocked || trial[f] >= cfg.max_curl {
                active[f] = false;
            }
            if !blocked {
                curls[f] = trial[f];
            }
        }
    }

    let params = posed(&shape, &curls, rotation, place(s), template);
    let mesh = forward_with_layer(&params, layer)?;
    if !touches(&mesh.vertices, object, cfg.tau) {
        return Ok(None);
    }
    let hand = MeshSolid::new(mesh.to_trimesh())?;
    if penetration_volume_solids(&hand, object) >= cfg.max_penetration {
        return Ok(None);
    }
    Ok(Some(params))
}

/// A grasp of `object` that touches it within `tau` and intersects it by
/// less than `max_penetration`; deterministic per seed.
pub fn make_synthetic_grasp(
    object: &MeshSolid,
    layer: &HandLayer,
    template: &HandTemplate,
    cfg: &GraspConfig,
    seed: u64,
) -> Result<HandParams> {
    debug_assert_eq!(template.parts.len(), NUM_PARTS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.max_attempts.max(1) {
        if let Some(p) = attempt(object, layer, template, cfg, &mut rng)? {
            return Ok(p);
        }
    }
    Err(Error::Generation {
        attempts: cfg.max_attempts.max(1),
        reason: "no attempt produced a touching, non-penetrating grasp".into(),
    })
}
