use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{add, cross, norm, scale, sub, Vec3};
use crate::error::{Error, Result};

/// Indexed triangle mesh in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidInput(format!(
                "face {f:?} references a vertex outside 0..{n}"
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite mesh vertex".into()));
        }
        Ok(Self { vertices, faces })
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Checks that every undirected edge is shared by exactly two faces with
    /// opposite orientation, i.e. each connected component is a closed,
    /// consistently oriented 2-manifold.
    pub fn check_watertight(&self) -> Result<()> {
        if self.faces.is_empty() {
            return Err(Error::NotWatertight("mesh has no faces".into()));
        }
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a == b {
                    return Err(Error::NotWatertight(format!("degenerate face {f:?}")));
                }
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::NotWatertight(format!(
                    "edge ({a}, {b}) used {count} times in the same direction"
                )));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::NotWatertight(format!("boundary edge ({a}, {b})")));
            }
        }
        Ok(())
    }

    /// Signed volume from the divergence theorem. Overlapping closed
    /// components are counted once each.
    pub fn volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                super::dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    pub fn area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds_of(&self.vertices)
    }

    /// Groups faces into edge-connected components.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for f in &self.faces {
            let r0 = find(&mut parent, f[0] as usize);
            for &v in &f[1..] {
                let r = find(&mut parent, v as usize);
                if r != r0 {
                    parent[r] = r0;
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut order = Vec::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let r = find(&mut parent, f[0] as usize);
            groups
                .entry(r)
                .or_insert_with(|| {
                    order.push(r);
                    Vec::new()
                })
                .push(fi);
        }
        order.into_iter().map(|r| groups.remove(&r).unwrap()).collect()
    }

    /// Area-weighted uniform surface samples.
    pub fn sample_surface<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Vec3> {
        let mut cumulative = Vec::with_capacity(self.faces.len());
        let mut total = 0.0;
        for f in 0..self.faces.len() {
            total += self.area(f);
            cumulative.push(total);
        }
        (0..n)
            .map(|_| {
                let t = rng.random::<f64>() * total;
                let f = cumulative.partition_point(|&c| c < t).min(self.faces.len() - 1);
                let [a, b, c] = self.triangle(f);
                let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                add(a, add(scale(sub(b, a), u), scale(sub(c, a), v)))
            })
            .collect()
    }

    pub fn translated(&self, offset: Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|&v| add(v, offset)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Concatenates meshes as separate components.
    pub fn merge(parts: &[TriMesh]) -> TriMesh {
        let mut out = TriMesh::default();
        for p in parts {
            let base = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&p.vertices);
            out.faces
                .extend(p.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        }
        out
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {:.9} {:.9} {:.9}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }

    /// Reads the `v` and `f` records of a Wavefront OBJ file. Polygons are
    /// fan-triangulated; texture/normal indices are ignored.
    pub fn read_obj<R: Read>(r: R) -> Result<TriMesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
                    if c.len() != 3 {
                        return Err(Error::Format(format!("line {}: short vertex", lineno + 1)));
                    }
                    vertices.push([c[0], c[1], c[2]]);
                }
                Some("f") => {
                    let idx: Vec<u32> = it
                        .map(|s| {
                            let head = s.split('/').next().unwrap_or("");
                            head.parse::<i64>().map_err(|e| {
                                Error::Format(format!("line {}: {e}", lineno + 1))
                            })
                        })
                        .map(|r| {
                            r.and_then(|i| {
                                let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                                u32::try_from(resolved).map_err(|_| {
                                    Error::Format(format!("line {}: bad index {i}", lineno + 1))
                                })
                            })
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(Error::Format(format!("line {}: short face", lineno + 1)));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        TriMesh::new(vertices, faces)
    }
}

pub fn bounds_of(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}
