use candle_core::{DType, Device, Tensor, D};
use serde::{Deserialize, Serialize};

use super::params::{HandParams, PARAM_DIM, POSE_DIM, POSTURE_DIM, SHAPE_DIM};
use super::template::{HandTemplate, NUM_BONES, NUM_JOINTS, NUM_PARTS};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sub, TriMesh, Vec3};
use crate::ops;

/// Bones shorter than this are rejected by the angle computation.
pub const MIN_BONE_LENGTH: f64 = 1e-8;
/// Cosines are clamped to `[-1 + ANGLE_CLAMP, 1 - ANGLE_CLAMP]` before arccos.
pub const ANGLE_CLAMP: f64 = 1e-7;

/// Posed hand surface and keypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandMesh {
    pub vertices: Vec<Vec3>,
    pub joints: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

impl HandMesh {
    pub fn to_trimesh(&self) -> TriMesh {
        TriMesh { vertices: self.vertices.clone(), faces: self.faces.clone() }
    }

    /// OBJ with the keypoints stored as `# j x y z` comment records, so plain
    /// mesh viewers still load the surface.
    pub fn write_obj<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for j in &self.joints {
            writeln!(w, "# j {:.9} {:.9} {:.9}", j[0], j[1], j[2])?;
        }
        self.to_trimesh().write_obj(w)
    }

    /// Reads a file written by [`HandMesh::write_obj`]. Files without
    /// keypoint records give an empty `joints`.
    pub fn read_obj<R: std::io::Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut joints = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# j ") {
                let c: Vec<f64> = rest
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Format(format!("keypoint record: {e}")))?;
                if c.len() != 3 {
                    return Err(Error::Format("keypoint record needs 3 coordinates".into()));
                }
                joints.push([c[0], c[1], c[2]]);
            }
        }
        let mesh = TriMesh::read_obj(text.as_bytes())?;
        Ok(Self { vertices: mesh.vertices, joints, faces: mesh.faces })
    }
}

/// Template data uploaded as tensors; evaluates the differentiable
/// shape-blend + linear-blend-skinning layer on batches of parameters.
#[derive(Debug, Clone)]
pub struct HandLayer {
    rest_vertices: Tensor,
    shape_basis: Tensor,
    rest_joints: Tensor,
    joint_shape_basis: Tensor,
    weights: Tensor,
    parents: Vec<i32>,
    angle_index: [Tensor; 3],
    faces: Vec<[u32; 3]>,
    num_vertices: usize,
    num_angles: usize,
}

fn apply3(m: &Tensor, x: &Tensor) -> candle_core::Result<Tensor> {
    // m [.., 3, 3], x [.., 3]  ->  m x  [.., 3]
    m.broadcast_mul(&x.unsqueeze(D::Minus2)?)?.sum(D::Minus1)
}

/// Axis-angle `[N, 3]` to rotation matrices minus identity, `[N, 3, 3]`.
/// Exactly zero for a zero rotation.
fn rotation_delta(r: &Tensor) -> candle_core::Result<Tensor> {
    let n = r.dim(0)?;
    let r2 = r.sqr()?.sum_keepdim(1)?;
    let theta = r2.affine(1.0, 1e-24)?.sqrt()?;
    let a = theta.sin()?.div(&theta)?;
    let half = theta.affine(0.5, 0.0)?;
    let b = half.sin()?.div(&half)?.sqr()?.affine(0.5, 0.0)?;
    let x = r.narrow(1, 0, 1)?;
    let y = r.narrow(1, 1, 1)?;
    let z = r.narrow(1, 2, 1)?;
    let zero = x.zeros_like()?;
    let k = Tensor::cat(&[&zero, &z.neg()?, &y, &z, &zero, &x.neg()?, &y.neg()?, &x, &zero], 1)?;
    let rrt = r.unsqueeze(2)?.broadcast_mul(&r.unsqueeze(1)?)?.reshape((n, 9))?;
    let eye = Tensor::new(&[1.0f64, 0., 0., 0., 1., 0., 0., 0., 1.], r.device())?
        .to_dtype(r.dtype())?
        .unsqueeze(0)?;
    let sym = rrt.sub(&r2.broadcast_mul(&eye)?)?;
    let delta = k.broadcast_mul(&a)?.add(&sym.broadcast_mul(&b)?)?;
    delta.reshape((n, 3, 3))
}

impl HandLayer {
    pub fn new(template: &HandTemplate, dtype: DType, device: &Device) -> Result<Self> {
        template.validate()?;
        let v = template.num_vertices();
        let flat = |xs: &[Vec3]| xs.iter().flatten().copied().collect::<Vec<f64>>();
        let t = |data: Vec<f64>, shape: (usize, usize)| -> Result<Tensor> {
            Ok(Tensor::from_vec(data, shape, device)?.to_dtype(dtype)?)
        };
        let idx = |k: usize| -> Result<Tensor> {
            let data: Vec<u32> = template.angle_triplets.iter().map(|t| t[k] as u32).collect();
            let n = data.len();
            Ok(Tensor::from_vec(data, n, device)?)
        };
        Ok(Self {
            rest_vertices: t(flat(&template.vertices), (1, v * 3))?,
            shape_basis: t(template.shape_basis.clone(), (SHAPE_DIM, v * 3))?,
            rest_joints: t(flat(&template.joints), (1, NUM_JOINTS * 3))?,
            joint_shape_basis: t(template.joint_shape_basis.clone(), (SHAPE_DIM, NUM_JOINTS * 3))?,
            weights: t(template.skinning_weights.clone(), (v, NUM_BONES))?,
            parents: template.parents.clone(),
            angle_index: [idx(0)?, idx(1)?, idx(2)?],
            faces: template.faces.clone(),
            num_vertices: v,
            num_angles: template.angle_triplets.len(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_angles(&self) -> usize {
        self.num_angles
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    /// `params [B, 61]` (posture ∥ position) to `(vertices [B, V, 3],
    /// joints [B, 21, 3])`. Global rotation (about the origin) and
    /// translation are applied after skinning.
    pub fn forward(&self, params: &Tensor) -> Result<(Tensor, Tensor)> {
        let (b, p) = params.dims2()?;
        if p != PARAM_DIM {
            return Err(Error::DimensionMismatch { expected: PARAM_DIM, actual: p });
        }
        let v = self.num_vertices;
        let shape = params.narrow(1, 0, SHAPE_DIM)?;
        let pose = params.narrow(1, SHAPE_DIM, POSE_DIM)?;
        let translation = params.narrow(1, POSTURE_DIM, 3)?;
        let rotation = params.narrow(1, POSTURE_DIM + 3, 3)?;

        let verts = self
            .rest_vertices
            .broadcast_add(&shape.matmul(&self.shape_basis)?)?
            .reshape((b, v, 3))?;
        let joints = self
            .rest_joints
            .broadcast_add(&shape.matmul(&self.joint_shape_basis)?)?
            .reshape((b, NUM_JOINTS, 3))?;

        let local = rotation_delta(&pose.reshape((b * (NUM_BONES - 1), 3))?)?
            .reshape((b, NUM_BONES - 1, 3, 3))?;
        let joint = |j: usize| joints.narrow(1, j, 1).and_then(|t| t.squeeze(1));

        // world rotation deltas (R - I) and joint displacements, per bone
        let zeros33 = Tensor::zeros((b, 3, 3), params.dtype(), params.device())?;
        let zeros3 = Tensor::zeros((b, 3), params.dtype(), params.device())?;
        let mut rot_delta: Vec<Tensor> = vec![zeros33];
        let mut disp: Vec<Tensor> = vec![zeros3];
        for bone in 1..NUM_BONES {
            let parent = self.parents[bone] as usize;
            let local_delta = local.narrow(1, bone - 1, 1)?.squeeze(1)?;
            // R_b - I = (Dp + I)(Dl + I) - I = Dp Dl + Dp + Dl
            let dp = &rot_delta[parent];
            let delta = dp.matmul(&local_delta)?.add(dp)?.add(&local_delta)?;
            let bone_vec = joint(bone)?.sub(&joint(parent)?)?;
            let d = apply3(dp, &bone_vec)?.add(&disp[parent])?;
            rot_delta.push(delta);
            disp.push(d);
        }

        // per-bone affine offset c_b = d_b - (R_b - I) j_b
        let mut offsets = Vec::with_capacity(NUM_BONES);
        for bone in 0..NUM_BONES {
            offsets.push(disp[bone].sub(&apply3(&rot_delta[bone], &joint(bone)?)?)?);
        }
        let m = Tensor::stack(&rot_delta, 1)?.reshape((b, NUM_BONES, 9))?;
        let c = Tensor::stack(&offsets, 1)?;
        let mv = self.weights.broadcast_matmul(&m)?.reshape((b, v, 3, 3))?;
        let cv = self.weights.broadcast_matmul(&c)?;
        let posed = verts.add(&apply3(&mv, &verts)?)?.add(&cv)?;

        let mut posed_joints = Vec::with_capacity(NUM_JOINTS);
        for j in 0..NUM_JOINTS {
            if j < NUM_BONES {
                posed_joints.push(joint(j)?.add(&disp[j])?);
            } else {
                let parent = self.parents[j] as usize;
                let rel = joint(j)?.sub(&joint(parent)?)?;
                posed_joints.push(joint(j)?.add(&apply3(&rot_delta[parent], &rel)?)?.add(&disp[parent])?);
            }
        }
        let posed_joints = Tensor::stack(&posed_joints, 1)?;

        let global = rotation_delta(&rotation)?.unsqueeze(1)?;
        let t = translation.unsqueeze(1)?;
        let place = |x: &Tensor| -> candle_core::Result<Tensor> {
            x.add(&apply3(&global, x)?)?.broadcast_add(&t)
        };
        Ok((place(&posed)?, place(&posed_joints)?))
    }

    /// Interior joint angles `[B, K]` in radians from keypoints `[B, 21, 3]`.
    pub fn joint_angles(&self, joints: &Tensor) -> Result<Tensor> {
        let prev = joints.index_select(&self.angle_index[0], 1)?;
        let mid = joints.index_select(&self.angle_index[1], 1)?;
        let next = joints.index_select(&self.angle_index[2], 1)?;
        let a = prev.sub(&mid)?;
        let c = next.sub(&mid)?;
        let la = ops::sq_norm_last(&a)?.sqrt()?;
        let lc = ops::sq_norm_last(&c)?.sqrt()?;
        let shortest = la
            .min(D::Minus1)?
            .minimum(&lc.min(D::Minus1)?)?
            .to_dtype(DType::F64)?
            .to_vec1::<f64>()?;
        for &len in &shortest {
            if !(len >= MIN_BONE_LENGTH) {
                let joint = self.degenerate_joint(joints)?;
                return Err(Error::DegenerateBone { joint, length: len });
            }
        }
        let cos = a.mul(&c)?.sum(D::Minus1)?.div(&la.mul(&lc)?)?;
        let cos = cos.clamp(-1.0 + ANGLE_CLAMP, 1.0 - ANGLE_CLAMP)?;
        Ok(ops::acos(&cos)?)
    }

    fn degenerate_joint(&self, joints: &Tensor) -> Result<usize> {
        let all = joints.to_dtype(DType::F64)?.to_vec3::<f64>()?;
        let mid = self.angle_index[1].to_vec1::<u32>()?;
        let prev = self.angle_index[0].to_vec1::<u32>()?;
        let next = self.angle_index[2].to_vec1::<u32>()?;
        for sample in &all {
            let at = |i: u32| {
                let r = &sample[i as usize];
                [r[0], r[1], r[2]]
            };
            for k in 0..mid.len() {
                let m = at(mid[k]);
                if norm(sub(at(prev[k]), m)) < MIN_BONE_LENGTH || norm(sub(at(next[k]), m)) < MIN_BONE_LENGTH {
                    return Ok(mid[k] as usize);
                }
            }
        }
        Ok(0)
    }
}

/// Evaluates the hand layer for one parameter set in double precision.
pub fn forward_kinematics(params: &HandParams, template: &HandTemplate) -> Result<HandMesh> {
    let layer = HandLayer::new(template, DType::F64, &Device::Cpu)?;
    forward_with_layer(params, &layer)
}

pub fn forward_with_layer(params: &HandParams, layer: &HandLayer) -> Result<HandMesh> {
    params.check_finite()?;
    let input = Tensor::from_vec(params.to_vec(), (1, PARAM_DIM), &Device::Cpu)?.to_dtype(layer.rest_vertices.dtype())?;
    let (verts, joints) = layer.forward(&input)?;
    Ok(HandMesh {
        vertices: tensor_points(&verts.squeeze(0)?)?,
        joints: tensor_points(&joints.squeeze(0)?)?,
        faces: layer.faces.clone(),
    })
}

/// Batched convenience wrapper.
pub fn forward_batch(params: &[HandParams], layer: &HandLayer) -> Result<Vec<HandMesh>> {
    if params.is_empty() {
        return Ok(Vec::new());
    }
    for p in params {
        p.check_finite()?;
    }
    let data: Vec<f64> = params.iter().flat_map(|p| p.to_vec()).collect();
    let input = Tensor::from_vec(data, (params.len(), PARAM_DIM), &Device::Cpu)?.to_dtype(layer.rest_vertices.dtype())?;
    let (verts, joints) = layer.forward(&input)?;
    (0..params.len())
        .map(|i| {
            Ok(HandMesh {
                vertices: tensor_points(&verts.get(i)?)?,
                joints: tensor_points(&joints.get(i)?)?,
                faces: layer.faces.clone(),
            })
        })
        .collect()
}

/// `[N, 3]` tensor to points.
pub fn tensor_points(t: &Tensor) -> Result<Vec<Vec3>> {
    Ok(t.to_dtype(DType::F64)?
        .to_vec2::<f64>()?
        .into_iter()
        .map(|r| [r[0], r[1], r[2]])
        .collect())
}

/// Angle at `mid` between the bones towards `prev` and `next`, radians.
pub fn angle_at(prev: Vec3, mid: Vec3, next: Vec3) -> Result<f64> {
    let a = sub(prev, mid);
    let c = sub(next, mid);
    let (la, lc) = (norm(a), norm(c));
    if la < MIN_BONE_LENGTH || lc < MIN_BONE_LENGTH {
        return Err(Error::DegenerateBone { joint: 0, length: la.min(lc) });
    }
    let cos = (dot(a, c) / (la * lc)).clamp(-1.0 + ANGLE_CLAMP, 1.0 - ANGLE_CLAMP);
    Ok(cos.acos())
}

/// Angles at every interior joint listed in `triplets`.
pub fn joint_angles(joints: &[Vec3], triplets: &[[usize; 3]]) -> Result<Vec<f64>> {
    triplets
        .iter()
        .map(|&[p, m, n]| {
            angle_at(joints[p], joints[m], joints[n]).map_err(|e| match e {
                Error::DegenerateBone { length, .. } => Error::DegenerateBone { joint: m, length },
                other => other,
            })
        })
        .collect()
}

/// Subtracts the centroid; returns `(centered, mean)`.
pub fn center_vertices(vertices: &[Vec3]) -> (Vec<Vec3>, Vec3) {
    let n = vertices.len().max(1) as f64;
    let mut mean = [0.0; 3];
    for v in vertices {
        for k in 0..3 {
            mean[k] += v[k];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    (vertices.iter().map(|&v| sub(v, mean)).collect(), mean)
}

/// Splits a posed mesh into the template's parts (thumb, index, middle,
/// ring, little, palm).
pub fn partition_vertices(vertices: &[Vec3], template: &HandTemplate) -> Result<Vec<Vec<Vec3>>> {
    if vertices.len() != template.num_vertices() {
        return Err(Error::Topology { expected: template.num_vertices(), actual: vertices.len() });
    }
    debug_assert_eq!(template.parts.len(), NUM_PARTS);
    Ok(template
        .parts
        .iter()
        .map(|idx| idx.iter().map(|&i| vertices[i as usize]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{add, axis_angle_matrix, mat_vec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Mat = [[f64; 3]; 3];

    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    /// Textbook rigid-transform chain: G_b = G_p * [R_b | j_b - j_p], then
    /// skin with G_b * inv([I | j_b]).
    fn oracle(p: &HandParams, t: &HandTemplate) -> (Vec<Vec3>, Vec<Vec3>) {
        let v = t.num_vertices();
        let mut verts = t.vertices.clone();
        let mut joints = t.joints.clone();
        for s in 0..SHAPE_DIM {
            for i in 0..v {
                for k in 0..3 {
                    verts[i][k] += p.shape[s] * t.shape_basis[(s * v + i) * 3 + k];
                }
            }
            for j in 0..NUM_JOINTS {
                for k in 0..3 {
                    joints[j][k] += p.shape[s] * t.joint_shape_basis[(s * NUM_JOINTS + j) * 3 + k];
                }
            }
        }
        let mut rot: Vec<Mat> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
        let mut origin: Vec<Vec3> = vec![joints[0]];
        for b in 1..NUM_BONES {
            let parent = t.parents[b] as usize;
            let r = [p.pose[3 * (b - 1)], p.pose[3 * (b - 1) + 1], p.pose[3 * (b - 1) + 2]];
            let local = axis_angle_matrix(r);
            let o = add(origin[parent], mat_vec(&rot[parent], sub(joints[b], joints[parent])));
            rot.push(matmul(&rot[parent], &local));
            origin.push(o);
        }
        let global = axis_angle_matrix(p.rotation);
        let place = |x: Vec3| add(mat_vec(&global, x), p.translation);
        let posed: Vec<Vec3> = (0..v)
            .map(|i| {
                let mut acc = [0.0; 3];
                for b in 0..NUM_BONES {
                    let w = t.weight(i, b);
                    if w == 0.0 {
                        continue;
                    }
                    let x = add(origin[b], mat_vec(&rot[b], sub(verts[i], joints[b])));
                    for k in 0..3 {
                        acc[k] += w * x[k];
                    }
                }
                place(acc)
            })
            .collect();
        let posed_joints: Vec<Vec3> = (0..NUM_JOINTS)
            .map(|j| {
                if j < NUM_BONES {
                    place(origin[j])
                } else {
                    let parent = t.parents[j] as usize;
                    place(add(origin[parent], mat_vec(&rot[parent], sub(joints[j], joints[parent]))))
                }
            })
            .collect();
        (posed, posed_joints)
    }

    fn random_params(rng: &mut ChaCha8Rng) -> HandParams {
        let mut p = HandParams::default();
        p.shape.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        p.pose.iter_mut().for_each(|x| *x = rng.random_range(-0.6..0.6));
        p.rotation.iter_mut().for_each(|x| *x = rng.random_range(-2.0..2.0));
        p.translation.iter_mut().for_each(|x| *x = rng.random_range(-0.2..0.2));
        p
    }

    #[test]
    fn zero_params_reproduce_rest_pose_exactly() {
        let t = HandTemplate::standard();
        let mesh = forward_kinematics(&HandParams::default(), &t).unwrap();
        assert_eq!(mesh.vertices.len(), 778);
        assert_eq!(mesh.joints.len(), 21);
        assert_eq!(mesh.vertices, t.vertices);
        assert_eq!(mesh.joints, t.joints);
        assert_eq!(mesh.faces, t.faces);
    }

    #[test]
    fn obj_round_trip_keeps_keypoints() {
        let t = HandTemplate::toy();
        let mesh = forward_kinematics(&HandParams::default(), &t).unwrap();
        let mut buf = Vec::new();
        mesh.write_obj(&mut buf).unwrap();
        let back = HandMesh::read_obj(buf.as_slice()).unwrap();
        assert_eq!(back.faces, mesh.faces);
        assert_eq!(back.joints.len(), mesh.joints.len());
        for (a, b) in back.vertices.iter().chain(&back.joints).zip(mesh.vertices.iter().chain(&mesh.joints)) {
            assert!((0..3).all(|k| (a[k] - b[k]).abs() < 1e-8));
        }
    }

    #[test]
    fn matches_rigid_chain_oracle() {
        let t = HandTemplate::toy();
        let layer = HandLayer::new(&t, DType::F64, &Device::Cpu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params: Vec<HandParams> = (0..4).map(|_| random_params(&mut rng)).collect();
        let meshes = forward_batch(&params, &layer).unwrap();
        for (p, mesh) in params.iter().zip(&meshes) {
            let (v, j) = oracle(p, &t);
            for (a, b) in mesh.vertices.iter().zip(&v).chain(mesh.joints.iter().zip(&j)) {
                assert!(norm(sub(*a, *b)) < 1e-12, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn translation_shifts_everything() {
        let t = HandTemplate::toy();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_params(&mut rng);
        let mut q = p;
        q.translation = add(q.translation, [0.1, -0.05, 0.02]);
        let a = forward_kinematics(&p, &t).unwrap();
        let b = forward_kinematics(&q, &t).unwrap();
        for (x, y) in a.vertices.iter().zip(&b.vertices) {
            assert!(norm(sub(add(*x, [0.1, -0.05, 0.02]), *y)) < 1e-12);
        }
    }

    #[test]
    fn rest_angles_and_degenerate_bone() {
        let t = HandTemplate::standard();
        let angles = joint_angles(&t.joints, &t.angle_triplets).unwrap();
        assert_eq!(angles.len(), 15);
        assert!(angles.iter().all(|a| (0.0..=std::f64::consts::PI).contains(a)));

        let layer = HandLayer::new(&t, DType::F64, &Device::Cpu).unwrap();
        let joints = Tensor::from_vec(t.joints.iter().flatten().copied().collect::<Vec<_>>(), (1, 21, 3), &Device::Cpu)
            .unwrap();
        let batched = layer.joint_angles(&joints).unwrap().to_vec2::<f64>().unwrap();
        for (a, b) in angles.iter().zip(&batched[0]) {
            assert!((a - b).abs() < 1e-12);
        }

        let mut bad = t.joints.clone();
        bad[5] = bad[4];
        match joint_angles(&bad, &t.angle_triplets) {
            Err(Error::DegenerateBone { joint, .. }) => assert!(joint == 4 || joint == 5),
            other => panic!("expected degenerate bone, got {other:?}"),
        }
        let bad_t = Tensor::from_vec(bad.iter().flatten().copied().collect::<Vec<_>>(), (1, 21, 3), &Device::Cpu).unwrap();
        assert!(matches!(layer.joint_angles(&bad_t), Err(Error::DegenerateBone { .. })));
    }

    #[test]
    fn partition_and_centering() {
        let t = HandTemplate::standard();
        let parts = partition_vertices(&t.vertices, &t).unwrap();
        assert_eq!(parts.len(), 6);
        assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), 778);
        assert!(matches!(partition_vertices(&t.vertices[..700], &t), Err(Error::Topology { .. })));

        let (c, mean) = center_vertices(&t.vertices);
        let (_, m2) = center_vertices(&c);
        assert!(norm(m2) < 1e-12);
        assert!(norm(mean) > 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = HandTemplate::toy();
        let layer = HandLayer::new(&t, DType::F64, &Device::Cpu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_params(&mut rng).to_vec();
        let loss = |x: &Tensor| -> Tensor {
            let (v, j) = layer.forward(x).unwrap();
            let a = layer.joint_angles(&j).unwrap();
            v.sqr().unwrap().sum_all().unwrap().add(&a.sum_all().unwrap()).unwrap()
        };
        let var = candle_core::Var::from_tensor(&Tensor::from_vec(p.clone(), (1, 61), &Device::Cpu).unwrap()).unwrap();
        let grads = loss(var.as_tensor()).backward().unwrap();
        let g = grads.get(&var).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        for i in [0, 5, 12, 30, 54, 55, 57, 58, 60] {
            let h = 1e-6;
            let eval = |d: f64| {
                let mut q = p.clone();
                q[i] += d;
                loss(&Tensor::from_vec(q, (1, 61), &Device::Cpu).unwrap()).to_scalar::<f64>().unwrap()
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "param {i}: {} vs {fd}", g[i]);
        }
    }
}
