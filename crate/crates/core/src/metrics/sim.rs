//! Gravity-drop stability proxy: the hand is fixed, the object translates
//! under gravity and is pushed back by penalty springs at hand vertices
//! that lie inside it.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{add, dot, norm, scale, sub, MeshSolid, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// m/s², acting along -z.
    pub gravity: f64,
    /// Seconds.
    pub duration: f64,
    /// Seconds per step.
    pub dt: f64,
    pub substeps: usize,
    /// Total contact stiffness per unit object mass, 1/s², shared evenly
    /// among the active contacts.
    pub stiffness: f64,
    pub damping_ratio: f64,
    pub friction: f64,
    /// Sampling pitch of the cached signed-distance grid, meters.
    pub sdf_cell: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            duration: 1.0,
            dt: 1.0 / 240.0,
            substeps: 8,
            stiffness: 1e5,
            damping_ratio: 0.7,
            friction: 0.8,
            sdf_cell: 1e-3,
        }
    }
}

/// Trilinear interpolation of lazily evaluated signed distances on a
/// regular lattice.
struct LazySdf<'a> {
    solid: &'a MeshSolid,
    cell: f64,
    cache: RefCell<HashMap<[i64; 3], f64>>,
}

impl<'a> LazySdf<'a> {
    fn new(solid: &'a MeshSolid, cell: f64) -> Self {
        Self { solid, cell, cache: RefCell::new(HashMap::new()) }
    }

    fn node(&self, key: [i64; 3]) -> f64 {
        if let Some(&v) = self.cache.borrow().get(&key) {
            return v;
        }
        let p = key.map(|k| k as f64 * self.cell);
        let v = self.solid.signed_distance(p);
        self.cache.borrow_mut().insert(key, v);
        v
    }

    /// Value and gradient at `p`.
    fn eval(&self, p: Vec3) -> (f64, Vec3) {
        let g = p.map(|x| x / self.cell);
        let base = g.map(|x| x.floor());
        let t = [g[0] - base[0], g[1] - base[1], g[2] - base[2]];
        let b = base.map(|x| x as i64);
        let mut c = [[[0.0; 2]; 2]; 2];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cj) in ci.iter_mut().enumerate() {
                for (k, ck) in cj.iter_mut().enumerate() {
                    *ck = self.node([b[0] + i as i64, b[1] + j as i64, b[2] + k as i64]);
                }
            }
        }
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let value = lerp(
            lerp(lerp(c[0][0][0], c[0][0][1], t[2]), lerp(c[0][1][0], c[0][1][1], t[2]), t[1]),
            lerp(lerp(c[1][0][0], c[1][0][1], t[2]), lerp(c[1][1][0], c[1][1][1], t[2]), t[1]),
            t[0],
        );
        let dx = lerp(
            lerp(c[1][0][0] - c[0][0][0], c[1][0][1] - c[0][0][1], t[2]),
            lerp(c[1][1][0] - c[0][1][0], c[1][1][1] - c[0][1][1], t[2]),
            t[1],
        );
        let dy = lerp(
            lerp(c[0][1][0] - c[0][0][0], c[0][1][1] - c[0][0][1], t[2]),
            lerp(c[1][1][0] - c[1][0][0], c[1][1][1] - c[1][0][1], t[2]),
            t[0],
        );
        let dz = lerp(
            lerp(c[0][0][1] - c[0][0][0], c[0][1][1] - c[0][1][0], t[1]),
            lerp(c[1][0][1] - c[1][0][0], c[1][1][1] - c[1][1][0], t[1]),
            t[0],
        );
        (value, scale([dx, dy, dz], 1.0 / self.cell))
    }
}

struct Contact {
    /// Unit direction the object is pushed in.
    push: Vec3,
    force: f64,
}

/// Object center-of-mass displacement after `duration` seconds, in cm.
pub fn simulation_displacement(hand_vertices: &[Vec3], object: &MeshSolid, cfg: &SimConfig) -> f64 {
    let sdf = LazySdf::new(object, cfg.sdf_cell);
    let (lo, hi) = object.mesh().bounds();
    let margin = 2.0 * cfg.sdf_cell;
    let steps = (cfg.duration / cfg.dt).round() as usize;
    let h = cfg.dt / cfg.substeps.max(1) as f64;
    let gravity = [0.0, 0.0, -cfg.gravity];

    let accel = |x: Vec3, v: Vec3| -> Vec3 {
        let mut hits = Vec::new();
        for &p in hand_vertices {
            let q = sub(p, x);
            if (0..3).any(|k| q[k] < lo[k] - margin || q[k] > hi[k] + margin) {
                continue;
            }
            let (d, grad) = sdf.eval(q);
            if d >= 0.0 {
                continue;
            }
            let gn = norm(grad);
            if gn == 0.0 {
                continue;
            }
            hits.push((-d, scale(grad, -1.0 / gn)));
        }
        let n = hits.len().max(1) as f64;
        let k = cfg.stiffness / n;
        let c = 2.0 * cfg.damping_ratio * cfg.stiffness.sqrt() / n;
        let contacts: Vec<Contact> = hits
            .into_iter()
            .map(|(depth, push)| Contact { push, force: (k * depth - c * dot(v, push)).max(0.0) })
            .collect();
        let mut a = gravity;
        for c in &contacts {
            a = add(a, scale(c.push, c.force));
        }
        let total: f64 = contacts.iter().map(|c| c.force).sum();
        if total > 0.0 && cfg.friction > 0.0 {
            // Coulomb friction as a per-contact clamp of the tangential
            // acceleration that would stop the object within one substep.
            let stop = scale(add(v, scale(a, h)), -1.0 / h);
            let mut fr = [0.0; 3];
            for c in &contacts {
                let w = c.force / total;
                let tangential = sub(stop, scale(c.push, dot(stop, c.push)));
                let t = scale(tangential, w);
                let mag = norm(t);
                let cap = cfg.friction * c.force;
                fr = add(fr, if mag > cap { scale(t, cap / mag) } else { t });
            }
            a = add(a, fr);
        }
        a
    };

    let mut x = [0.0; 3];
    let mut v = [0.0; 3];
    let mut a = accel(x, v);
    for _ in 0..steps * cfg.substeps.max(1) {
        x = add(add(x, scale(v, h)), scale(a, 0.5 * h * h));
        let v_pred = add(v, scale(a, h));
        let a_new = accel(x, v_pred);
        v = add(v, scale(add(a, a_new), 0.5 * h));
        a = a_new;
    }
    norm(x) * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::cuboid;

    fn cube() -> MeshSolid {
        MeshSolid::new(cuboid([-0.01; 3], [0.01; 3], 2)).unwrap()
    }

    #[test]
    fn free_fall() {
        let d = simulation_displacement(&[], &cube(), &SimConfig::default());
        assert!((d - 490.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn enclosed_object_stays_put() {
        // a dense shell of vertices hugging the cube from every side
        let shell = cuboid([-0.0098; 3], [0.0098; 3], 20);
        let d = simulation_displacement(&shell.vertices, &cube(), &SimConfig::default());
        assert!(d < 0.1, "{d}");
        let again = simulation_displacement(&shell.vertices, &cube(), &SimConfig::default());
        assert_eq!(d, again);
    }

    #[test]
    fn resting_on_a_plate() {
        let plate: Vec<Vec3> = (0..21)
            .flat_map(|i| (0..21).map(move |j| [-0.02 + 0.002 * i as f64, -0.02 + 0.002 * j as f64, -0.0099]))
            .collect();
        let d = simulation_displacement(&plate, &cube(), &SimConfig::default());
        assert!(d < 0.1, "{d}");
    }

    #[test]
    fn sdf_interpolant_matches_exact_away_from_edges() {
        let c = cube();
        let sdf = LazySdf::new(&c, 1e-3);
        for p in [[0.0, 0.0, 0.0095], [0.003, -0.002, 0.0], [0.0, 0.0, 0.015]] {
            let (v, g) = sdf.eval(p);
            assert!((v - c.signed_distance(p)).abs() < 2e-4, "{p:?}: {v}");
            assert!(norm(g) > 0.5);
        }
    }
}
