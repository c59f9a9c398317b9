//! Closed, outward-oriented triangle meshes for simple solids.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{add, scale, TriMesh, Vec3};

/// One cross-section of a lofted tube: `center + cos(phi) * u + sin(phi) * v`.
/// `u x v` must point along the direction of travel.
#[derive(Debug, Clone, Copy)]
pub struct Ring {
    pub center: Vec3,
    pub u: Vec3,
    pub v: Vec3,
}

/// Closed tube through `rings` with fan caps at `start` and `end`.
///
/// Vertex layout: `rings.len() * segments` ring vertices (ring-major), then
/// the start cap, then the end cap.
pub fn loft(rings: &[Ring], start: Vec3, end: Vec3, segments: usize) -> TriMesh {
    assert!(rings.len() >= 1 && segments >= 3);
    let mut vertices = Vec::with_capacity(rings.len() * segments + 2);
    for ring in rings {
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            let (s, c) = phi.sin_cos();
            vertices.push(add(ring.center, add(scale(ring.u, c), scale(ring.v, s))));
        }
    }
    let cap0 = vertices.len() as u32;
    vertices.push(start);
    let cap1 = vertices.len() as u32;
    vertices.push(end);

    let idx = |i: usize, j: usize| (i * segments + j % segments) as u32;
    let mut faces = Vec::with_capacity(2 * segments * rings.len());
    for i in 0..rings.len() - 1 {
        for j in 0..segments {
            faces.push([idx(i, j), idx(i, j + 1), idx(i + 1, j)]);
            faces.push([idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)]);
        }
    }
    let last = rings.len() - 1;
    for j in 0..segments {
        faces.push([cap0, idx(0, j + 1), idx(0, j)]);
        faces.push([cap1, idx(last, j), idx(last, j + 1)]);
    }
    TriMesh { vertices, faces }
}

/// Ellipsoid-capable UV sphere with `rings` latitude circles.
pub fn ellipsoid(center: Vec3, radii: Vec3, rings: usize, segments: usize) -> TriMesh {
    let rings: Vec<Ring> = (1..=rings)
        .map(|i| {
            // latitude from the -z pole to the +z pole
            let theta = PI * i as f64 / (rings + 1) as f64;
            let (s, c) = theta.sin_cos();
            Ring {
                center: add(center, [0.0, 0.0, -radii[2] * c]),
                u: [radii[0] * s, 0.0, 0.0],
                v: [0.0, radii[1] * s, 0.0],
            }
        })
        .collect();
    loft(
        &rings,
        add(center, [0.0, 0.0, -radii[2]]),
        add(center, [0.0, 0.0, radii[2]]),
        segments,
    )
}

pub fn sphere(center: Vec3, radius: f64, rings: usize, segments: usize) -> TriMesh {
    ellipsoid(center, [radius; 3], rings, segments)
}

/// Cylinder along z with flat fan caps.
pub fn cylinder(center: Vec3, radius: f64, half_height: f64, stacks: usize, segments: usize) -> TriMesh {
    let stacks = stacks.max(1);
    let rings: Vec<Ring> = (0..=stacks)
        .map(|i| {
            let z = -half_height + 2.0 * half_height * i as f64 / stacks as f64;
            Ring {
                center: add(center, [0.0, 0.0, z]),
                u: [radius, 0.0, 0.0],
                v: [0.0, radius, 0.0],
            }
        })
        .collect();
    loft(
        &rings,
        add(center, [0.0, 0.0, -half_height]),
        add(center, [0.0, 0.0, half_height]),
        segments,
    )
}

/// Axis-aligned box `[lo, hi]` with each face split into `n x n` quads.
pub fn cuboid(lo: Vec3, hi: Vec3, n: usize) -> TriMesh {
    let n = n.max(1);
    let mut index: HashMap<[usize; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vertex = |key: [usize; 3]| -> u32 {
        *index.entry(key).or_insert_with(|| {
            let p = [0, 1, 2].map(|k| lo[k] + (hi[k] - lo[k]) * key[k] as f64 / n as f64);
            vertices.push(p);
            (vertices.len() - 1) as u32
        })
    };
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let mut corner = |di: usize, dj: usize| {
                        let mut key = [0; 3];
                        key[axis] = side;
                        key[b] = i + di;
                        key[c] = j + dj;
                        vertex(key)
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                    if side == n {
                        faces.push([q[0], q[1], q[2]]);
                        faces.push([q[0], q[2], q[3]]);
                    } else {
                        faces.push([q[0], q[2], q[1]]);
                        faces.push([q[0], q[3], q[2]]);
                    }
                }
            }
        }
    }
    TriMesh { vertices, faces }
}
