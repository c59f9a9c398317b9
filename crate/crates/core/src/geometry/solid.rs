use std::collections::HashMap;

use super::{closest_point_on_triangle, dist2, Vec3};
use super::mesh::TriMesh;
use crate::error::Result;

// Offset applied to every parity ray so that rays never pass exactly through
// a mesh edge or vertex of axis-aligned fixtures.
const RAY_JITTER: [f64; 2] = [1.234_567_9e-9, 2.718_281_8e-9];

/// Closed mesh with an inside/outside oracle.
///
/// Each connected component is tested separately with a +z ray-parity count
/// and the results are OR-ed, so unions of overlapping closed parts (a hand
/// made of finger tubes and a palm, a composite object) are handled.
#[derive(Debug, Clone)]
pub struct MeshSolid {
    mesh: TriMesh,
    components: Vec<ColumnIndex>,
}

#[derive(Debug, Clone)]
struct ColumnIndex {
    lo: [f64; 2],
    hi: [f64; 2],
    zmax: f64,
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl ColumnIndex {
    fn build(mesh: &TriMesh, faces: &[usize]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut zmax = f64::NEG_INFINITY;
        for &f in faces {
            for p in mesh.triangle(f) {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
                zmax = zmax.max(p[2]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let per_axis = ((faces.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let cell = extent / per_axis as f64;
        let dims = [
            (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1),
            (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1),
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        for &f in faces {
            let tri = mesh.triangle(f);
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for p in tri {
                for k in 0..2 {
                    let i = (((p[k] - lo[k]) / cell).floor().max(0.0) as usize).min(dims[k] - 1);
                    a[k] = a[k].min(i);
                    b[k] = b[k].max(i);
                }
            }
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    buckets[i * dims[1] + j].push(f as u32);
                }
            }
        }
        Self { lo, hi, zmax, cell, dims, buckets }
    }

    fn contains(&self, mesh: &TriMesh, p: Vec3) -> bool {
        let x = p[0] + RAY_JITTER[0];
        let y = p[1] + RAY_JITTER[1];
        if x < self.lo[0] || x > self.hi[0] || y < self.lo[1] || y > self.hi[1] || p[2] > self.zmax {
            return false;
        }
        let i = (((x - self.lo[0]) / self.cell) as usize).min(self.dims[0] - 1);
        let j = (((y - self.lo[1]) / self.cell) as usize).min(self.dims[1] - 1);
        let mut crossings = 0u32;
        for &f in &self.buckets[i * self.dims[1] + j] {
            let [a, b, c] = mesh.triangle(f as usize);
            let e0 = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
            let e1 = (c[0] - b[0]) * (y - b[1]) - (c[1] - b[1]) * (x - b[0]);
            let e2 = (a[0] - c[0]) * (y - c[1]) - (a[1] - c[1]) * (x - c[0]);
            let inside = (e0 > 0.0 && e1 > 0.0 && e2 > 0.0) || (e0 < 0.0 && e1 < 0.0 && e2 < 0.0);
            if !inside {
                continue;
            }
            let area = e0 + e1 + e2;
            // barycentric weights: e1 is opposite a, e2 opposite b, e0 opposite c
            let z = (e1 * a[2] + e2 * b[2] + e0 * c[2]) / area;
            if z > p[2] {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }
}

impl MeshSolid {
    /// Fails with `NotWatertight` unless every component is closed.
    pub fn new(mesh: TriMesh) -> Result<Self> {
        mesh.check_watertight()?;
        let components = mesh
            .components()
            .iter()
            .map(|faces| ColumnIndex::build(&mesh, faces))
            .collect();
        Ok(Self { mesh, components })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.components.iter().any(|c| c.contains(&self.mesh, p))
    }

    /// Unsigned distance to the surface and the closest surface point.
    pub fn closest_point(&self, p: Vec3) -> (f64, Vec3) {
        let mut best = (f64::INFINITY, p);
        for f in 0..self.mesh.faces.len() {
            let [a, b, c] = self.mesh.triangle(f);
            let q = closest_point_on_triangle(p, a, b, c);
            let d = dist2(p, q);
            if d < best.0 {
                best = (d, q);
            }
        }
        (best.0.sqrt(), best.1)
    }

    /// Negative inside, positive outside.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        let (d, _) = self.closest_point(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }
}

/// Uniform hash grid over a point set for radius and nearest-neighbour
/// queries.
#[derive(Debug, Clone)]
pub struct PointGrid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
    points: Vec<Vec3>,
}

impl PointGrid {
    pub fn new(points: &[Vec3], cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(cell, *p)).or_default().push(i as u32);
        }
        Self { cell, cells, points: points.to_vec() }
    }

    fn key(cell: f64, p: Vec3) -> [i64; 3] {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        ]
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Calls `visit` with the index of every point within `radius` of `p`.
    pub fn for_each_within(&self, p: Vec3, radius: f64, mut visit: impl FnMut(usize)) {
        let r2 = radius * radius;
        let lo = Self::key(self.cell, [p[0] - radius, p[1] - radius, p[2] - radius]);
        let hi = Self::key(self.cell, [p[0] + radius, p[1] + radius, p[2] + radius]);
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    if let Some(bucket) = self.cells.get(&[i, j, k]) {
                        for &idx in bucket {
                            if dist2(self.points[idx as usize], p) <= r2 {
                                visit(idx as usize);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn any_within(&self, p: Vec3, radius: f64) -> bool {
        let mut hit = false;
        self.for_each_within(p, radius, |_| hit = true);
        hit
    }

    /// Index and distance of the nearest point; ties resolve to the lowest
    /// index.
    pub fn nearest(&self, p: Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let center = Self::key(self.cell, p);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = 6i64;
        let mut settled = false;
        for ring in 0..=max_ring {
            for i in -ring..=ring {
                for j in -ring..=ring {
                    for k in -ring..=ring {
                        if i.abs().max(j.abs()).max(k.abs()) != ring {
                            continue;
                        }
                        let key = [center[0] + i, center[1] + j, center[2] + k];
                        if let Some(bucket) = self.cells.get(&key) {
                            for &idx in bucket {
                                let d = dist2(self.points[idx as usize], p);
                                let better = match best {
                                    None => true,
                                    Some((bi, bd)) => d < bd || (d == bd && (idx as usize) < bi),
                                };
                                if better {
                                    best = Some((idx as usize, d));
                                }
                            }
                        }
                    }
                }
            }
            // Every unvisited cell is at least `ring * cell` away.
            if let Some((_, bd)) = best {
                let reach = ring as f64 * self.cell;
                if bd <= reach * reach {
                    settled = true;
                    break;
                }
            }
        }
        if !settled {
            best = self
                .points
                .iter()
                .enumerate()
                .map(|(i, q)| (i, dist2(*q, p)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        best.map(|(i, d)| (i, d.sqrt()))
    }
}
