use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::primitives::{cuboid, cylinder, sphere};
use crate::geometry::{MeshSolid, TriMesh, Vec3};

/// Default number of surface samples per object.
pub const DEFAULT_CLOUD_POINTS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectFamily {
    Sphere,
    Box,
    Cylinder,
    /// A cylinder with a ball fused onto its top.
    Composite,
}

impl ObjectFamily {
    pub const ALL: [ObjectFamily; 4] = [Self::Sphere, Self::Box, Self::Cylinder, Self::Composite];
}

/// Concrete dimensions in meters; every shape is centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectShape {
    Sphere { radius: f64 },
    Box { size: Vec3 },
    Cylinder { radius: f64, height: f64 },
    Composite { radius: f64, height: f64, ball_radius: f64 },
}

impl ObjectShape {
    /// Largest axis-aligned extent.
    pub fn extent(&self) -> f64 {
        match *self {
            Self::Sphere { radius } => 2.0 * radius,
            Self::Box { size } => size[0].max(size[1]).max(size[2]),
            Self::Cylinder { radius, height } => (2.0 * radius).max(height),
            Self::Composite { radius, height, ball_radius } => {
                (2.0 * radius).max(2.0 * ball_radius).max(height + ball_radius)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims: Vec<f64> = match *self {
            Self::Sphere { radius } => vec![radius],
            Self::Box { size } => size.to_vec(),
            Self::Cylinder { radius, height } => vec![radius, height],
            Self::Composite { radius, height, ball_radius } => vec![radius, height, ball_radius],
        };
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidParameter(format!("object dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Closed primitives making up the shape; composites are unions of
    /// overlapping components.
    pub fn components(&self) -> Vec<TriMesh> {
        match *self {
            Self::Sphere { radius } => vec![sphere([0.0; 3], radius, 24, 32)],
            Self::Box { size } => vec![cuboid(size.map(|s| -0.5 * s), size.map(|s| 0.5 * s), 4)],
            Self::Cylinder { radius, height } => vec![cylinder([0.0; 3], radius, 0.5 * height, 4, 32)],
            Self::Composite { radius, height, ball_radius } => {
                // center the union's z-range on the origin
                let shift = -0.5 * ball_radius;
                vec![
                    cylinder([0.0, 0.0, shift], radius, 0.5 * height, 4, 32),
                    sphere([0.0, 0.0, shift + 0.5 * height], ball_radius, 16, 24),
                ]
            }
        }
    }

    pub fn mesh(&self) -> TriMesh {
        TriMesh::merge(&self.components())
    }
}

/// Family plus the allowed range of the largest extent, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub family: ObjectFamily,
    pub min_extent: f64,
    pub max_extent: f64,
}

impl ObjectSpec {
    pub fn new(family: ObjectFamily) -> Self {
        Self { family, min_extent: 0.03, max_extent: 0.12 }
    }

    /// Draws concrete dimensions whose largest extent lies in range.
    pub fn sample_shape(&self, rng: &mut ChaCha8Rng) -> Result<ObjectShape> {
        if !(self.min_extent > 0.0 && self.min_extent <= self.max_extent) {
            return Err(Error::InvalidParameter(format!(
                "extent range [{}, {}] is empty or not positive",
                self.min_extent, self.max_extent
            )));
        }
        let extent = rng.random_range(self.min_extent..=self.max_extent);
        let frac = |rng: &mut ChaCha8Rng, lo: f64| extent * rng.random_range(lo..=1.0);
        let shape = match self.family {
            ObjectFamily::Sphere => ObjectShape::Sphere { radius: 0.5 * extent },
            ObjectFamily::Box => {
                let mut size = [extent, frac(rng, 0.35), frac(rng, 0.35)];
                let k = rng.random_range(0..3);
                size.swap(0, k);
                ObjectShape::Box { size }
            }
            ObjectFamily::Cylinder => {
                if rng.random_bool(0.5) {
                    ObjectShape::Cylinder { radius: 0.5 * frac(rng, 0.3), height: extent }
                } else {
                    ObjectShape::Cylinder { radius: 0.5 * extent, height: frac(rng, 0.3) }
                }
            }
            ObjectFamily::Composite => {
                let ball_radius = 0.5 * extent * rng.random_range(0.3..=0.6);
                let height = extent - ball_radius;
                let radius = 0.5 * extent * rng.random_range(0.3..=0.7);
                ObjectShape::Composite { radius, height, ball_radius }
            }
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// An object with its surface point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticObject {
    pub shape: ObjectShape,
    pub mesh: TriMesh,
    pub cloud: Vec<Vec3>,
}

impl SyntheticObject {
    pub fn from_shape(shape: ObjectShape, points: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        shape.validate()?;
        if points == 0 {
            return Err(Error::InvalidParameter("an object cloud needs at least one point".into()));
        }
        let parts = shape.components();
        let cloud = if parts.len() == 1 {
            parts[0].sample_surface(points, rng)
        } else {
            union_surface_samples(&parts, points, rng)?
        };
        Ok(Self { shape, mesh: TriMesh::merge(&parts), cloud })
    }

    pub fn solid(&self) -> Result<MeshSolid> {
        MeshSolid::new(self.mesh.clone())
    }
}

/// Surface samples of a union: samples falling inside another component are
/// rejected and redrawn.
fn union_surface_samples(parts: &[TriMesh], points: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec3>> {
    let solids = parts.iter().map(|m| MeshSolid::new(m.clone())).collect::<Result<Vec<_>>>()?;
    let areas: Vec<f64> = parts.iter().map(|m| (0..m.faces.len()).map(|f| m.area(f)).sum()).collect();
    let total: f64 = areas.iter().sum();
    let mut out = Vec::with_capacity(points);
    let mut guard = 0usize;
    while out.len() < points {
        guard += 1;
        if guard > 100 * points {
            return Err(Error::InvalidParameter("composite surface is fully enclosed".into()));
        }
        let mut t = rng.random::<f64>() * total;
        let mut c = parts.len() - 1;
        for (i, a) in areas.iter().enumerate() {
            if t < *a {
                c = i;
                break;
            }
            t -= a;
        }
        let p = parts[c].sample_surface(1, rng)[0];
        if solids.iter().enumerate().all(|(j, s)| j == c || !s.contains(p)) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Deterministic object for a spec and seed.
pub fn make_object(spec: &ObjectSpec, seed: u64, points: usize) -> Result<SyntheticObject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = spec.sample_shape(&mut rng)?;
    SyntheticObject::from_shape(shape, points, &mut rng)
}

/// Exact volume of the primitive (the composite overlap is subtracted).
pub fn analytic_volume(shape: &ObjectShape) -> f64 {
    match *shape {
        ObjectShape::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
        ObjectShape::Box { size } => size[0] * size[1] * size[2],
        ObjectShape::Cylinder { radius, height } => PI * radius * radius * height,
        ObjectShape::Composite { radius, height, ball_radius } => {
            // ball centered on the top cap: the lower half-ball clipped to the
            // cylinder's radius overlaps the body
            let r = ball_radius.min(radius);
            let h = (ball_radius * ball_radius - r * r).sqrt();
            let overlap = if ball_radius <= radius {
                2.0 / 3.0 * PI * ball_radius.powi(3)
            } else {
                // cylinder of radius r, height h, plus the spherical cap below it
                let cap = ball_radius - h;
                PI * r * r * h + PI * cap * cap * (3.0 * ball_radius - cap) / 3.0
            };
            let overlap = overlap.min(PI * radius * radius * height);
            PI * radius * radius * height + 4.0 / 3.0 * PI * ball_radius.powi(3) - overlap
        }
    }
}
