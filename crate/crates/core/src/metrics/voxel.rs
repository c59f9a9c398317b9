use crate::error::Result;
use crate::geometry::{MeshSolid, TriMesh};

/// Volume of one voxel, cm³.
pub const VOXEL_VOLUME_CM3: f64 = 0.1;

/// Voxel edge length in meters: `(0.1 cm³)^(1/3)`.
pub fn voxel_edge() -> f64 {
    VOXEL_VOLUME_CM3.cbrt() * 0.01
}

/// Number of voxel centers inside both solids. The grid is anchored at the
/// minimum corner of the two meshes' combined bounding box, so the result
/// is symmetric in its arguments.
pub fn shared_voxels(a: &MeshSolid, b: &MeshSolid, edge: f64) -> usize {
    let (alo, ahi) = a.mesh().bounds();
    let (blo, bhi) = b.mesh().bounds();
    let origin = [0, 1, 2].map(|k| alo[k].min(blo[k]));
    let lo = [0, 1, 2].map(|k| alo[k].max(blo[k]));
    let hi = [0, 1, 2].map(|k| ahi[k].min(bhi[k]));
    if (0..3).any(|k| lo[k] >= hi[k]) {
        return 0;
    }
    // voxel i has center origin + (i + 0.5) * edge
    let first = [0, 1, 2].map(|k| (((lo[k] - origin[k]) / edge - 0.5).ceil().max(0.0)) as i64);
    let last = [0, 1, 2].map(|k| ((hi[k] - origin[k]) / edge - 0.5).floor() as i64);
    let mut count = 0;
    for i in first[0]..=last[0] {
        for j in first[1]..=last[1] {
            for k in first[2]..=last[2] {
                let p = [
                    origin[0] + (i as f64 + 0.5) * edge,
                    origin[1] + (j as f64 + 0.5) * edge,
                    origin[2] + (k as f64 + 0.5) * edge,
                ];
                if a.contains(p) && b.contains(p) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Intersection volume of two closed meshes in cm³, measured on a grid of
/// 0.1 cm³ voxels.
pub fn penetration_volume(hand: &TriMesh, object: &TriMesh) -> Result<f64> {
    let a = MeshSolid::new(hand.clone())?;
    let b = MeshSolid::new(object.clone())?;
    Ok(penetration_volume_solids(&a, &b))
}

pub fn penetration_volume_solids(hand: &MeshSolid, object: &MeshSolid) -> f64 {
    shared_voxels(hand, object, voxel_edge()) as f64 * VOXEL_VOLUME_CM3
}

/// Voxelized volume of a single closed mesh, cm³, on the same grid rule.
pub fn voxel_volume(mesh: &MeshSolid) -> f64 {
    shared_voxels(mesh, mesh, voxel_edge()) as f64 * VOXEL_VOLUME_CM3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::cuboid;

    fn cube_cm(x0: f64) -> TriMesh {
        cuboid([x0 * 0.01, 0.0, 0.0], [(x0 + 1.0) * 0.01, 0.01, 0.01], 2)
    }

    #[test]
    fn edge_length() {
        assert!((voxel_edge() - 0.004641588833612779).abs() < 1e-15);
    }

    #[test]
    fn overlapping_cubes() {
        let a = cube_cm(0.0);
        let b = cube_cm(0.5);
        let v = penetration_volume(&a, &b).unwrap();
        assert!((v - 0.5).abs() <= 2.0 * VOXEL_VOLUME_CM3 + 1e-12, "{v}");
        assert_eq!(v, penetration_volume(&b, &a).unwrap());
        assert_eq!(penetration_volume(&a, &cube_cm(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn self_intersection_is_own_volume() {
        let a = MeshSolid::new(cube_cm(0.0)).unwrap();
        assert_eq!(penetration_volume_solids(&a, &a), voxel_volume(&a));
        assert!((voxel_volume(&a) - 1.0).abs() < 0.5);
    }
}
