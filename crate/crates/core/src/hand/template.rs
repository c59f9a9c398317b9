use std::collections::BTreeSet;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::params::SHAPE_DIM;
use crate::error::{Error, Result};
use crate::geometry::primitives::{self, Ring};
use crate::geometry::{add, cross, dot, normalize, scale, sub, TriMesh, Vec3};

/// Number of rotating joints (wrist + 5 chains of 3).
pub const NUM_BONES: usize = 16;
/// Rotating joints plus the five fingertip keypoints.
pub const NUM_JOINTS: usize = 21;
pub const NUM_PARTS: usize = 6;

/// Canonical part order. Codebook slot `i` always encodes part `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
    Palm,
}

impl Part {
    pub const ALL: [Part; NUM_PARTS] =
        [Part::Thumb, Part::Index, Part::Middle, Part::Ring, Part::Little, Part::Palm];

    pub fn name(self) -> &'static str {
        match self {
            Part::Thumb => "thumb",
            Part::Index => "index",
            Part::Middle => "middle",
            Part::Ring => "ring",
            Part::Little => "little",
            Part::Palm => "palm",
        }
    }
}

/// Joint layout: 0 wrist; fingers in canonical order with three joints each
/// (1..=15); fingertips 16..=20.
pub fn joint_parents() -> [i32; NUM_JOINTS] {
    let mut parents = [0i32; NUM_JOINTS];
    parents[0] = -1;
    for f in 0..5 {
        let base = 1 + 3 * f;
        parents[base] = 0;
        parents[base + 1] = base as i32;
        parents[base + 2] = (base + 1) as i32;
        parents[16 + f] = (base + 2) as i32;
    }
    parents
}

/// Rest-pose hand with skinning data and the fixed part partition.
#[derive(Debug, Clone, PartialEq)]
pub struct HandTemplate {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    /// Rest keypoints, `NUM_JOINTS` of them.
    pub joints: Vec<Vec3>,
    pub parents: Vec<i32>,
    /// Row-major `V x NUM_BONES`.
    pub skinning_weights: Vec<f64>,
    /// `SHAPE_DIM x V x 3`.
    pub shape_basis: Vec<f64>,
    /// `SHAPE_DIM x NUM_JOINTS x 3`, the same deformation fields evaluated at
    /// the keypoints.
    pub joint_shape_basis: Vec<f64>,
    /// Vertex indices per part, canonical order.
    pub parts: Vec<Vec<u32>>,
    /// Vertices that can plausibly touch an object (fingertip pads, palm).
    pub contact_candidates: Vec<u32>,
    /// `(previous, joint, next)` keypoint triples whose angle feeds the
    /// skeletal gate.
    pub angle_triplets: Vec<[usize; 3]>,
    /// Preferred flexion axis of each finger joint (`NUM_BONES - 1` entries),
    /// expressed in the rest frame.
    pub flex_axes: Vec<Vec3>,
}

/// Tessellation density of the procedural template.
#[derive(Debug, Clone, Copy)]
pub struct TemplateResolution {
    pub palm_rings: usize,
    pub palm_segments: usize,
    pub finger_rings: usize,
    pub finger_segments: usize,
}

impl TemplateResolution {
    /// 13 * 22 + 2 palm vertices and 5 * (12 * 8 + 2) finger vertices: 778.
    pub const FULL: Self = Self { palm_rings: 13, palm_segments: 22, finger_rings: 12, finger_segments: 8 };
    /// 60 vertices, for fast tests.
    pub const TOY: Self = Self { palm_rings: 2, palm_segments: 4, finger_rings: 2, finger_segments: 4 };

    pub fn vertex_count(&self) -> usize {
        self.palm_rings * self.palm_segments + 2 + 5 * (self.finger_rings * self.finger_segments + 2)
    }
}

struct FingerSpec {
    base: Vec3,
    dir: Vec3,
    lengths: [f64; 3],
    radius: f64,
}

fn finger_specs() -> [FingerSpec; 5] {
    let finger = |x: f64, lengths: [f64; 3], radius: f64| FingerSpec {
        base: [x, 0.09, 0.0],
        dir: [0.0, 1.0, 0.0],
        lengths,
        radius,
    };
    [
        FingerSpec {
            base: [-0.022, 0.018, -0.008],
            dir: normalize([-0.62, 0.75, -0.22]),
            lengths: [0.038, 0.032, 0.028],
            radius: 0.0095,
        },
        finger(-0.027, [0.040, 0.025, 0.022], 0.0085),
        finger(-0.008, [0.045, 0.028, 0.024], 0.0088),
        finger(0.011, [0.042, 0.027, 0.023], 0.0082),
        finger(0.029, [0.033, 0.020, 0.019], 0.0072),
    ]
}

const BLEND_WIDTH: f64 = 0.008;
const PALM_Y: (f64, f64) = (-0.004, 0.100);
const PALM_RADII: (f64, f64) = (0.042, 0.014);

fn smoothstep(x: f64) -> f64 {
    let t = x.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Which structure a rest-space point belongs to, for shape fields.
#[derive(Clone, Copy)]
enum Anchor {
    Palm,
    Finger(usize),
}

/// Displacement of shape component `k` at rest point `p`.
fn shape_field(k: usize, p: Vec3, anchor: Anchor, fingers: &[FingerSpec; 5]) -> Vec3 {
    let (s, radial, base, f) = match anchor {
        Anchor::Palm => (0.0, [0.0; 3], p, usize::MAX),
        Anchor::Finger(f) => {
            let spec = &fingers[f];
            let s = dot(sub(p, spec.base), spec.dir);
            let radial = sub(sub(p, spec.base), scale(spec.dir, s));
            (s, radial, spec.base, f)
        }
    };
    let along = |gain: f64| match anchor {
        Anchor::Finger(f) => scale(fingers[f].dir, gain * s.max(0.0)),
        Anchor::Palm => [0.0; 3],
    };
    match k {
        0 => scale(p, 0.06),
        1 => along(0.08),
        2 => [0.08 * p[0], 0.0, 0.0],
        3 => [0.0, 0.0, 0.1 * p[2]],
        4 => [0.0, 0.08 * base[1].min(0.09), 0.0],
        5 if f == 0 => along(0.1),
        6 if f == 1 || f == 2 => along(0.08),
        6 if f == 3 || f == 4 => along(-0.08),
        7 => scale(radial, 0.12),
        8 if f != usize::MAX && f > 0 => [0.15 * base[0], 0.0, 0.0],
        9 if f == 0 => [-0.004, 0.0, -0.002],
        _ => [0.0; 3],
    }
}

impl HandTemplate {
    /// The default 778-vertex template.
    pub fn standard() -> Self {
        Self::procedural(TemplateResolution::FULL)
    }

    /// The 60-vertex template used by fast tests.
    pub fn toy() -> Self {
        Self::procedural(TemplateResolution::TOY)
    }

    /// Builds a right hand in meters: wrist at the origin, fingers along
    /// +y, palm facing -z, thumb on the -x side.
    pub fn procedural(res: TemplateResolution) -> Self {
        let fingers = finger_specs();
        let mut meshes = Vec::new();
        // (anchor, bone weights) per vertex in mesh order
        let mut anchors: Vec<Anchor> = Vec::new();
        let mut weights: Vec<[f64; NUM_BONES]> = Vec::new();

        // Palm: lofted along +y with a superelliptic width profile.
        let (y0, y1) = PALM_Y;
        let (mid, half) = ((y0 + y1) * 0.5, (y1 - y0) * 0.5);
        let palm_rings: Vec<Ring> = (1..=res.palm_rings)
            .map(|i| {
                let y = y0 + (y1 - y0) * i as f64 / (res.palm_rings + 1) as f64;
                let t = ((y - mid) / half).abs();
                let profile = (1.0 - t.powi(4)).max(0.0).powf(0.25);
                Ring {
                    center: [0.0, y, 0.0],
                    u: [0.0, 0.0, PALM_RADII.1 * profile],
                    v: [PALM_RADII.0 * profile, 0.0, 0.0],
                }
            })
            .collect();
        let palm = primitives::loft(&palm_rings, [0.0, y0, 0.0], [0.0, y1, 0.0], res.palm_segments);
        for _ in 0..palm.vertices.len() {
            anchors.push(Anchor::Palm);
            let mut w = [0.0; NUM_BONES];
            w[0] = 1.0;
            weights.push(w);
        }
        meshes.push(palm);

        let mut contact = BTreeSet::new();
        let mut finger_vertex_start = Vec::new();
        for (f, spec) in fingers.iter().enumerate() {
            let total: f64 = spec.lengths.iter().sum();
            let s_start = -0.012;
            let s_end = total - 0.45 * spec.radius;
            let helper = if spec.dir[2].abs() > 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
            // u x v = dir
            let u0 = normalize(cross(helper, spec.dir));
            let v0 = cross(spec.dir, u0);
            let rings: Vec<Ring> = (0..res.finger_rings)
                .map(|i| {
                    let s = if res.finger_rings == 1 {
                        0.5 * (s_start + s_end)
                    } else {
                        s_start + (s_end - s_start) * i as f64 / (res.finger_rings - 1) as f64
                    };
                    let r = spec.radius * (1.0 - 0.25 * (s.max(0.0) / total));
                    Ring { center: add(spec.base, scale(spec.dir, s)), u: scale(u0, r), v: scale(v0, r) }
                })
                .collect();
            let tube = primitives::loft(
                &rings,
                add(spec.base, scale(spec.dir, s_start - 0.5 * spec.radius)),
                add(spec.base, scale(spec.dir, total)),
                res.finger_segments,
            );
            let offset: usize = meshes.iter().map(|m| m.vertices.len()).sum();
            finger_vertex_start.push(offset);
            let bounds = [0.0, spec.lengths[0], spec.lengths[0] + spec.lengths[1]];
            for (i, &p) in tube.vertices.iter().enumerate() {
                let s = dot(sub(p, spec.base), spec.dir);
                let h: Vec<f64> = bounds.iter().map(|&b| smoothstep((s - b) / BLEND_WIDTH + 0.5)).collect();
                let bone = 1 + 3 * f;
                let mut w = [0.0; NUM_BONES];
                w[0] = 1.0 - h[0];
                w[bone] = h[0] - h[1];
                w[bone + 1] = h[1] - h[2];
                w[bone + 2] = h[2];
                weights.push(w);
                anchors.push(Anchor::Finger(f));
                if s > bounds[2] + 0.25 * spec.lengths[2] {
                    contact.insert((offset + i) as u32);
                }
            }
            meshes.push(tube);
        }

        let mesh = TriMesh::merge(&meshes);
        let v = mesh.vertices.len();

        // palm pad: palm-side vertices of the palm body
        for (i, p) in mesh.vertices.iter().enumerate().take(meshes[0].vertices.len()) {
            if p[2] < -0.6 * PALM_RADII.1 && p[1] > 0.02 && p[1] < 0.088 {
                contact.insert(i as u32);
            }
        }

        // keypoints
        let mut joints = vec![[0.0; 3]; NUM_JOINTS];
        let mut joint_anchor = vec![Anchor::Palm; NUM_JOINTS];
        for (f, spec) in fingers.iter().enumerate() {
            let mut s = 0.0;
            for k in 0..3 {
                joints[1 + 3 * f + k] = add(spec.base, scale(spec.dir, s));
                joint_anchor[1 + 3 * f + k] = Anchor::Finger(f);
                s += spec.lengths[k];
            }
            joints[16 + f] = add(spec.base, scale(spec.dir, s));
            joint_anchor[16 + f] = Anchor::Finger(f);
        }

        let mut shape_basis = vec![0.0; SHAPE_DIM * v * 3];
        let mut joint_shape_basis = vec![0.0; SHAPE_DIM * NUM_JOINTS * 3];
        for k in 0..SHAPE_DIM {
            for (i, (&p, &a)) in mesh.vertices.iter().zip(&anchors).enumerate() {
                let d = shape_field(k, p, a, &fingers);
                shape_basis[(k * v + i) * 3..(k * v + i) * 3 + 3].copy_from_slice(&d);
            }
            for (j, (&p, &a)) in joints.iter().zip(&joint_anchor).enumerate() {
                let d = shape_field(k, p, a, &fingers);
                joint_shape_basis[(k * NUM_JOINTS + j) * 3..(k * NUM_JOINTS + j) * 3 + 3].copy_from_slice(&d);
            }
        }

        // dominant-weight partition; root-dominant vertices belong to the palm
        let mut parts = vec![Vec::new(); NUM_PARTS];
        for (i, w) in weights.iter().enumerate() {
            let bone = (0..NUM_BONES).max_by(|&a, &b| w[a].total_cmp(&w[b]).then(b.cmp(&a))).unwrap();
            let part = if bone == 0 { 5 } else { (bone - 1) / 3 };
            parts[part].push(i as u32);
        }

        let mut angle_triplets = Vec::new();
        for f in 0..5 {
            let chain = [0, 1 + 3 * f, 2 + 3 * f, 3 + 3 * f, 16 + f];
            for w in chain.windows(3) {
                angle_triplets.push([w[0], w[1], w[2]]);
            }
        }

        let thumb_axis = normalize(cross(fingers[0].dir, [0.3, 0.3, -0.9]));
        let mut flex_axes = Vec::with_capacity(NUM_BONES - 1);
        for f in 0..5 {
            for _ in 0..3 {
                flex_axes.push(if f == 0 { thumb_axis } else { [-1.0, 0.0, 0.0] });
            }
        }

        let template = HandTemplate {
            vertices: mesh.vertices,
            faces: mesh.faces,
            joints,
            parents: joint_parents().to_vec(),
            skinning_weights: weights.into_iter().flatten().collect(),
            shape_basis,
            joint_shape_basis,
            parts,
            contact_candidates: contact.into_iter().collect(),
            angle_triplets,
            flex_axes,
        };
        debug_assert!(template.validate().is_ok());
        template
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of angles fed to the skeletal gate.
    pub fn num_angles(&self) -> usize {
        self.angle_triplets.len()
    }

    pub fn weight(&self, vertex: usize, bone: usize) -> f64 {
        self.skinning_weights[vertex * NUM_BONES + bone]
    }

    pub fn rest_mesh(&self) -> TriMesh {
        TriMesh { vertices: self.vertices.clone(), faces: self.faces.clone() }
    }

    /// Part index of every vertex.
    pub fn part_labels(&self) -> Vec<usize> {
        let mut labels = vec![usize::MAX; self.vertices.len()];
        for (p, idx) in self.parts.iter().enumerate() {
            for &i in idx {
                labels[i as usize] = p;
            }
        }
        labels
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.vertices.len();
        let bad = |m: String| Err(Error::InvalidInput(format!("hand template: {m}")));
        if v == 0 {
            return bad("no vertices".into());
        }
        if self.joints.len() != NUM_JOINTS || self.parents.len() != NUM_JOINTS {
            return bad(format!("expected {NUM_JOINTS} joints"));
        }
        for (j, &p) in self.parents.iter().enumerate() {
            if (j == 0) != (p < 0) || (p >= 0 && p as usize >= j) {
                return bad(format!("joint {j} has invalid parent {p}"));
            }
        }
        if self.faces.iter().flatten().any(|&i| i as usize >= v) {
            return bad("face references a missing vertex".into());
        }
        if self.skinning_weights.len() != v * NUM_BONES
            || self.shape_basis.len() != SHAPE_DIM * v * 3
            || self.joint_shape_basis.len() != SHAPE_DIM * NUM_JOINTS * 3
        {
            return bad("array sizes do not match the vertex count".into());
        }
        for i in 0..v {
            let row = &self.skinning_weights[i * NUM_BONES..(i + 1) * NUM_BONES];
            if row.iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return bad(format!("vertex {i} has a negative skinning weight"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return bad(format!("vertex {i} skinning weights sum to {sum}"));
            }
        }
        if self.parts.len() != NUM_PARTS {
            return bad(format!("expected {NUM_PARTS} parts, got {}", self.parts.len()));
        }
        let mut seen = vec![false; v];
        for part in &self.parts {
            for &i in part {
                let i = i as usize;
                if i >= v || seen[i] {
                    return bad(format!("vertex {i} is missing or assigned to two parts"));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return bad(format!("vertex {i} is not assigned to any part"));
        }
        if self.contact_candidates.iter().any(|&i| i as usize >= v) {
            return bad("contact candidate out of range".into());
        }
        if self.angle_triplets.iter().flatten().any(|&j| j >= NUM_JOINTS) {
            return bad("angle triplet out of range".into());
        }
        if self.flex_axes.len() != NUM_BONES - 1 {
            return bad("expected one flex axis per finger joint".into());
        }
        Ok(())
    }

    /// Binary archive, little-endian:
    ///
    /// ```text
    /// magic  b"PGHT"   u32 version (=1)
    /// u32 V, J, F, B (bones), S (shape comps), C (contact), A (angles)
    /// f32 vertices[V][3]      i32 faces[F][3]        f32 joints[J][3]
    /// i32 parents[J]          f32 weights[V][B]      f32 shape[S][V][3]
    /// f32 joint_shape[S][J][3] i32 part_label[V]     i32 contact[C]
    /// i32 angles[A][3]        f32 flex_axes[B-1][3]
    /// ```
    pub fn write_archive<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(TEMPLATE_MAGIC)?;
        w.write_u32::<LittleEndian>(TEMPLATE_VERSION)?;
        for n in [
            self.vertices.len(),
            NUM_JOINTS,
            self.faces.len(),
            NUM_BONES,
            SHAPE_DIM,
            self.contact_candidates.len(),
            self.angle_triplets.len(),
        ] {
            w.write_u32::<LittleEndian>(n as u32)?;
        }
        let f32s = |w: &mut W, xs: &mut dyn Iterator<Item = f64>| -> Result<()> {
            for x in xs {
                w.write_f32::<LittleEndian>(x as f32)?;
            }
            Ok(())
        };
        let i32s = |w: &mut W, xs: &mut dyn Iterator<Item = i64>| -> Result<()> {
            for x in xs {
                w.write_i32::<LittleEndian>(x as i32)?;
            }
            Ok(())
        };
        f32s(&mut w, &mut self.vertices.iter().flatten().copied())?;
        i32s(&mut w, &mut self.faces.iter().flatten().map(|&i| i as i64))?;
        f32s(&mut w, &mut self.joints.iter().flatten().copied())?;
        i32s(&mut w, &mut self.parents.iter().map(|&p| p as i64))?;
        f32s(&mut w, &mut self.skinning_weights.iter().copied())?;
        f32s(&mut w, &mut self.shape_basis.iter().copied())?;
        f32s(&mut w, &mut self.joint_shape_basis.iter().copied())?;
        i32s(&mut w, &mut self.part_labels().into_iter().map(|p| p as i64))?;
        i32s(&mut w, &mut self.contact_candidates.iter().map(|&i| i as i64))?;
        i32s(&mut w, &mut self.angle_triplets.iter().flatten().map(|&i| i as i64))?;
        f32s(&mut w, &mut self.flex_axes.iter().flatten().copied())?;
        Ok(())
    }

    pub fn read_archive<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != TEMPLATE_MAGIC {
            return Err(Error::Format("not a hand template archive".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != TEMPLATE_VERSION {
            return Err(Error::Version { found: version.to_string(), expected: TEMPLATE_VERSION.to_string() });
        }
        let mut dims = [0usize; 7];
        for d in dims.iter_mut() {
            *d = r.read_u32::<LittleEndian>()? as usize;
        }
        let [v, j, f, b, s, c, a] = dims;
        if j != NUM_JOINTS || b != NUM_BONES || s != SHAPE_DIM {
            return Err(Error::Format(format!("unsupported template layout J={j} B={b} S={s}")));
        }
        let vertices = chunk3(read_f32s(&mut r, v * 3)?);
        let faces_raw = read_i32s(&mut r, f * 3)?;
        let joints = chunk3(read_f32s(&mut r, j * 3)?);
        let parents: Vec<i32> = read_i32s(&mut r, j)?;
        let skinning_weights = read_f32s(&mut r, v * b)?;
        let shape_basis = read_f32s(&mut r, s * v * 3)?;
        let joint_shape_basis = read_f32s(&mut r, s * j * 3)?;
        let labels = read_i32s(&mut r, v)?;
        let contact = read_i32s(&mut r, c)?;
        let angles = read_i32s(&mut r, a * 3)?;
        let flex = chunk3(read_f32s(&mut r, (b - 1) * 3)?);

        let faces = faces_raw.chunks(3).map(|t| [t[0] as u32, t[1] as u32, t[2] as u32]).collect();
        let mut parts = vec![Vec::new(); NUM_PARTS];
        for (i, &l) in labels.iter().enumerate() {
            let l = usize::try_from(l).ok().filter(|&l| l < NUM_PARTS).ok_or_else(|| {
                Error::Format(format!("vertex {i} has part label {l}"))
            })?;
            parts[l].push(i as u32);
        }
        let template = HandTemplate {
            vertices,
            faces,
            joints,
            parents,
            skinning_weights,
            shape_basis,
            joint_shape_basis,
            parts,
            contact_candidates: contact.into_iter().map(|i| i as u32).collect(),
            angle_triplets: angles.chunks(3).map(|t| [t[0] as usize, t[1] as usize, t[2] as usize]).collect(),
            flex_axes: flex,
        };
        template.validate()?;
        Ok(template)
    }
}

const TEMPLATE_MAGIC: &[u8; 4] = b"PGHT";
const TEMPLATE_VERSION: u32 = 1;

fn chunk3(v: Vec<f64>) -> Vec<Vec3> {
    v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| Ok(r.read_f32::<LittleEndian>()? as f64)).collect()
}

fn read_i32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<i32>> {
    (0..n).map(|_| Ok(r.read_i32::<LittleEndian>()?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_template_dimensions() {
        let t = HandTemplate::standard();
        assert_eq!(t.num_vertices(), 778);
        assert_eq!(TemplateResolution::FULL.vertex_count(), 778);
        assert_eq!(t.joints.len(), 21);
        assert_eq!(t.num_angles(), 15);
        t.validate().unwrap();
        t.rest_mesh().check_watertight().unwrap();
        assert!(t.parts.iter().all(|p| !p.is_empty()));
        assert!(t.contact_candidates.len() > 50);
    }

    #[test]
    fn toy_template_dimensions() {
        let t = HandTemplate::toy();
        assert_eq!(t.num_vertices(), 60);
        t.validate().unwrap();
        t.rest_mesh().check_watertight().unwrap();
    }

    #[test]
    fn partition_is_disjoint_cover() {
        for t in [HandTemplate::standard(), HandTemplate::toy()] {
            let total: usize = t.parts.iter().map(|p| p.len()).sum();
            assert_eq!(total, t.num_vertices());
            let labels = t.part_labels();
            assert!(labels.iter().all(|&l| l < NUM_PARTS));
        }
    }

    #[test]
    fn archive_round_trip() {
        let t = HandTemplate::toy();
        let mut buf = Vec::new();
        t.write_archive(&mut buf).unwrap();
        let back = HandTemplate::read_archive(buf.as_slice()).unwrap();
        assert_eq!(back.faces, t.faces);
        assert_eq!(back.parts, t.parts);
        assert_eq!(back.angle_triplets, t.angle_triplets);
        for (a, b) in back.vertices.iter().zip(&t.vertices) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-7);
            }
        }
        buf[4] = 9;
        assert!(matches!(HandTemplate::read_archive(buf.as_slice()), Err(Error::Version { .. })));
    }
}
