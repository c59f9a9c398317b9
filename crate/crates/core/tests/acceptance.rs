//! Acceptance suite. Runs every criterion in order, prints one
//! `ACCEPTANCE <n> PASS|FAIL` line each, and exits non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use partgrasp::decoder::{DecoderConfig, DualStageDecoder};
use partgrasp::geometry::primitives::{cuboid, sphere};
use partgrasp::geometry::PointGrid;
use partgrasp::hand::{forward_kinematics, HandLayer, HandParams, HandTemplate, PARAM_DIM, POSTURE_DIM};
use partgrasp::losses::{
    compute_contact_sets, contact_losses, contact_pairs, pair_distance_sum, penetration_loss, penetration_pairs,
    reconstruction_loss_batch, total_loss, LossComponents, LossWeights,
};
use partgrasp::metrics::{
    contact_ratio, diversity, penetration_volume, quality_index, VOXEL_VOLUME_CM3, QUALITY_WEIGHT,
};
use partgrasp::nn::ParamStore;
use partgrasp::prior::{fit_prior, IndexSequence, PriorConfig, PriorModel};
use partgrasp::quantizer::{commitment_loss, straight_through, Codebook};
use partgrasp::{
    generate_corpus, run_training, DatagenConfig, GraspModel, HandMesh, MeshSolid, RunConfig, SampleOptions, Vec3,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Table 1 rows: (penetration cm³, displacement cm, printed quality index).
const TABLE_1: [(f64, f64, f64); 18] = [
    (7.23, 2.78, 4.12),
    (9.00, 2.65, 4.56),
    (6.53, 3.72, 4.57),
    (20.05, 4.14, 8.93),
    (5.36, 2.75, 3.54),
    (7.46, 2.97, 4.32),
    (8.26, 2.75, 4.41),
    (10.43, 3.64, 5.68),
    (29.78, 5.47, 12.79),
    (4.58, 3.35, 3.72),
    (3.54, 2.02, 2.48),
    (5.05, 1.74, 2.74),
    (10.56, 3.80, 5.83),
    (3.18, 2.13, 2.45),
    (4.32, 1.81, 2.57),
    (5.85, 2.06, 3.20),
    (10.53, 3.81, 5.83),
    (3.93, 2.70, 3.07),
];

fn c1_quality_index() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (i, &(pen, disp, printed)) in TABLE_1.iter().enumerate() {
        let err = (quality_index(pen, disp, QUALITY_WEIGHT) - printed).abs();
        worst = worst.max(err);
        check(err <= 0.01 + 1e-9, format!("row {i}: {pen}/{disp} gives error {err:.4}"))?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 1.0, format!("took {elapsed:.3}s"))?;
    Ok(format!("{} rows, max |error| {worst:.4} <= 0.01, {elapsed:.2e}s", TABLE_1.len()))
}

fn brute_force(z: &[f64], entries: &[Vec<f64>]) -> usize {
    let d = |e: &Vec<f64>| -> f64 { e.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum() };
    let mut best = 0;
    for k in 1..entries.len() {
        if d(&entries[k]) < d(&entries[best]) {
            best = k;
        }
    }
    best
}

fn c2_quantizer_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dim = 16;
    let mut agree = 0;
    let mut total = 0;
    for (trial, s) in [2usize, 64, 256].iter().cycle().take(1000).enumerate() {
        let mut store = ParamStore::new(DType::F64, Device::Cpu);
        let mut book = Codebook::new(&mut store, "b", *s, dim, &mut rng).map_err(|e| e.to_string())?;
        let entries = book.entry_vecs().map_err(|e| e.to_string())?;
        let z: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let expected = brute_force(&z, &entries);
        let got = book.quantize(&z, false).map_err(|e| e.to_string())?.index;
        let zt = Tensor::from_vec(z.clone(), (1, dim), &Device::Cpu).map_err(|e| e.to_string())?;
        let (batched, _) = book.lookup(&zt).map_err(|e| e.to_string())?;
        total += 1;
        if got == expected && batched[0] == expected {
            agree += 1;
        } else {
            return Err(format!("trial {trial} (S = {s}): quantize {got}, lookup {}, brute force {expected}", batched[0]));
        }
    }
    Ok(format!("{agree}/{total} pairs match brute-force argmin over S in {{2, 64, 256}}"))
}

fn random_params(rng: &mut ChaCha8Rng, pose: f64) -> HandParams {
    let mut p = HandParams::default();
    p.shape.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    p.pose.iter_mut().for_each(|x| *x = rng.random_range(-pose..pose));
    p.rotation.iter_mut().for_each(|x| *x = rng.random_range(-1.5..1.5));
    p.translation.iter_mut().for_each(|x| *x = rng.random_range(-0.05..0.05));
    p
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

fn central_difference(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

fn params_var(p: &[f64]) -> Var {
    Var::from_tensor(&Tensor::from_vec(p.to_vec(), (1, PARAM_DIM), &Device::Cpu).unwrap()).unwrap()
}

fn c3_gradient_checks() -> Outcome {
    let start = Instant::now();
    let template = HandTemplate::standard();
    let layer = HandLayer::new(&template, DType::F64, &Device::Cpu).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // Forward kinematics: a random linear functional of vertices and joints.
    let mut fk_worst: f64 = 0.0;
    for draw in 0..10 {
        let p = random_params(&mut rng, 0.6).to_vec();
        let nv = template.vertices.len();
        let nj = template.joints.len();
        let wv: Vec<f64> = (0..nv * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let wj: Vec<f64> = (0..nj * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let var = params_var(&p);
        let (v, j) = layer.forward(var.as_tensor()).unwrap();
        let wvt = Tensor::from_vec(wv.clone(), (1, nv, 3), &Device::Cpu).unwrap();
        let wjt = Tensor::from_vec(wj.clone(), (1, nj, 3), &Device::Cpu).unwrap();
        let loss = v.mul(&wvt).unwrap().sum_all().unwrap().add(&j.mul(&wjt).unwrap().sum_all().unwrap()).unwrap();
        let g = loss.backward().unwrap().get(&var).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let fd = central_difference(&p, 1e-6, |x| {
            let mesh = forward_kinematics(&HandParams::from_slice(x).unwrap(), &template).unwrap();
            let sv: f64 = mesh.vertices.iter().flatten().zip(&wv).map(|(a, b)| a * b).sum();
            let sj: f64 = mesh.joints.iter().flatten().zip(&wj).map(|(a, b)| a * b).sum();
            sv + sj
        });
        let err = rel_error(&g, &fd);
        fk_worst = fk_worst.max(err);
        check(err < 1e-4, format!("forward kinematics draw {draw}: relative error {err:.2e}"))?;
    }

    // Contact and penetration terms, with the contact sets recomputed at
    // every finite-difference evaluation.
    let w = LossWeights::default();
    let tau = 0.005;
    let mut cp_worst: f64 = 0.0;
    let mut draws = 0;
    while draws < 10 {
        let p = random_params(&mut rng, 0.3);
        let rest = forward_kinematics(&p, &template).unwrap();
        let palm = &template.parts[5];
        let anchor = rest.vertices[palm[rng.random_range(0..palm.len())] as usize];
        let radius = rng.random_range(0.015..0.03);
        let solid = MeshSolid::new(sphere(anchor, radius, 16, 24)).unwrap();
        let cloud = solid.mesh().sample_surface(600, &mut rng);
        let grid = PointGrid::new(&cloud, 0.005);
        let gt: Vec<usize> = (0..cloud.len()).filter(|_| rng.random_bool(0.05)).collect();

        let objective = |x: &[f64]| -> f64 {
            let verts = forward_kinematics(&HandParams::from_slice(x).unwrap(), &template).unwrap().vertices;
            let sets = compute_contact_sets(&verts, &gt, &cloud, &solid, &template.contact_candidates, tau).unwrap();
            let (l_c, _) = contact_losses(&sets, &verts, &cloud);
            w.lambda_c * l_c + w.lambda_p * penetration_loss(&sets, &verts, &grid)
        };
        let x = p.to_vec();
        let var = params_var(&x);
        let (v, _) = layer.forward(var.as_tensor()).unwrap();
        let v = v.squeeze(0).unwrap();
        let verts = rest.vertices.clone();
        let sets = compute_contact_sets(&verts, &gt, &cloud, &solid, &template.contact_candidates, tau).unwrap();
        if sets.inside.is_empty() {
            continue;
        }
        let c_pairs = contact_pairs(&verts, &sets, &cloud);
        let l_c = pair_distance_sum(&v, &c_pairs, false).unwrap();
        let l_p = pair_distance_sum(&v, &penetration_pairs(&verts, &sets, &grid), true).unwrap();
        let loss = l_c.affine(w.lambda_c, 0.0).unwrap().add(&l_p.affine(w.lambda_p, 0.0).unwrap()).unwrap();
        let value = loss.to_scalar::<f64>().unwrap();
        let reference = objective(&x);
        // The smoothed norm sits at most 1e-8 m below the exact distance per pair.
        let offset = w.lambda_c * 1e-8 * c_pairs.len() as f64;
        check(
            (value - reference).abs() <= offset + 1e-9 * reference.abs(),
            format!("tensor objective {value} vs reference {reference}"),
        )?;
        let g = loss.backward().unwrap().get(&var).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let fd = central_difference(&x, 1e-7, objective);
        let err = rel_error(&g, &fd);
        cp_worst = cp_worst.max(err);
        check(err < 1e-3, format!("contact/penetration draw {draws}: relative error {err:.2e}"))?;
        draws += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 60.0, format!("took {elapsed:.1}s"))?;
    Ok(format!("FK max rel err {fk_worst:.1e} < 1e-4; L_c+L_p max rel err {cp_worst:.1e} < 1e-3; {elapsed:.1}s"))
}

fn c4_straight_through_and_isolation() -> Outcome {
    // d(out)/d(z) is the identity under quantization.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut store = ParamStore::new(DType::F64, Device::Cpu);
    let book = Codebook::new(&mut store, "b", 16, 8, &mut rng).unwrap();
    let zv: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let z = Var::from_tensor(&Tensor::from_vec(zv, (2, 8), &Device::Cpu).unwrap()).unwrap();
    let (idx, q) = book.lookup(z.as_tensor()).unwrap();
    let out = straight_through(z.as_tensor(), &q).unwrap();
    check(
        out.to_vec2::<f64>().unwrap() == book.gather(&idx).unwrap().to_vec2::<f64>().unwrap(),
        "forward value is not the codebook entry",
    )?;
    let flat = out.flatten_all().unwrap();
    for k in 0..16 {
        let g = flat.get(k).unwrap().backward().unwrap();
        let row = g.get(&z).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let unit: Vec<f64> = (0..16).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        check(row == unit, format!("Jacobian row {k} is not e_{k}"))?;
    }

    // Position loss never reaches the posture stage (decoder level).
    let template = HandTemplate::toy();
    let layer = HandLayer::new(&template, DType::F64, &Device::Cpu).unwrap();
    let mut store = ParamStore::new(DType::F64, Device::Cpu);
    let dec = DualStageDecoder::new(&mut store, 6, 8, template.num_angles(), &DecoderConfig::default(), &mut rng).unwrap();
    let rand_t = |rng: &mut ChaCha8Rng, r: usize, c: usize| {
        let v: Vec<f64> = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::from_vec(v, (r, c), &Device::Cpu).unwrap()
    };
    let parts: Vec<Tensor> = (0..6).map(|_| rand_t(&mut rng, 3, 8)).collect();
    let (zt, zp) = (rand_t(&mut rng, 3, 8), rand_t(&mut rng, 3, 8));
    let decoded = dec.decode(&layer, &parts, &zt, &zp).unwrap();
    let target = rand_t(&mut rng, 3, 6);
    let grads = decoded.position.sub(&target).unwrap().sqr().unwrap().sum_all().unwrap().backward().unwrap();
    let mut checked = 0;
    for (name, var) in store.vars_with_prefix(&["dec.posture", "dec.gate", "dec.correction", "dec.stage_encoder"]) {
        if let Some(g) = grads.get(&var) {
            let n = g.abs().unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap();
            check(n == 0.0, format!("{name} receives position-loss gradient {n:e}"))?;
        }
        checked += 1;
    }
    let reached = store
        .vars_with_prefix(&["dec.position"])
        .iter()
        .any(|(_, v)| grads.get(v).is_some_and(|g| g.abs().unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap() > 0.0));
    check(reached, "position stage receives no gradient")?;

    // Same through the whole model: encoders feeding only the posture stage.
    let mut cfg = partgrasp::ModelConfig::default();
    cfg.template = partgrasp::TemplateKind::Toy;
    cfg.encoder.latent_dim = 8;
    cfg.encoder.hidden = vec![16, 16];
    cfg.codebook_size = 8;
    let model = GraspModel::new(&cfg, DType::F64).unwrap();
    let cloud: Vec<f64> = (0..2 * 64 * 3).map(|_| rng.random_range(-0.05..0.05)).collect();
    let clouds = Tensor::from_vec(cloud, (2, 64, 3), &Device::Cpu).unwrap();
    let nv = model.template().vertices.len();
    let hands: Vec<f64> = (0..2 * nv * 3).map(|_| rng.random_range(-0.05..0.05)).collect();
    let hands = Tensor::from_vec(hands, (2, nv, 3), &Device::Cpu).unwrap();
    let out = model.forward(&clouds, &hands).unwrap();
    let grads = out.decoded.position.sqr().unwrap().sum_all().unwrap().backward().unwrap();
    let mut model_checked = 0;
    for (name, var) in model.store().vars() {
        let posture_only = name.starts_with("enc.part")
            || name.starts_with("enc.object_type")
            || name.starts_with("part")
            || name.starts_with("dec.posture")
            || name.starts_with("dec.correction")
            || name.starts_with("dec.gate")
            || name.starts_with("dec.stage_encoder");
        if posture_only {
            if let Some(g) = grads.get(var) {
                let n = g.abs().unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap();
                check(n == 0.0, format!("{name} receives position-loss gradient {n:e}"))?;
            }
            model_checked += 1;
        }
    }
    check(model_checked > 0, "no posture-stage variables found")?;
    Ok(format!(
        "16x16 Jacobian is identity; {checked} decoder and {model_checked} model posture-stage tensors get exactly zero position gradient"
    ))
}

fn cube_cm(offset_cm: f64) -> partgrasp::TriMesh {
    let o = offset_cm / 100.0;
    cuboid([o, 0.0, 0.0], [o + 0.01, 0.01, 0.01], 2)
}

fn c5_geometry() -> Outcome {
    let a = cube_cm(0.0);
    let b = cube_cm(0.5);
    let v = penetration_volume(&a, &b).map_err(|e| e.to_string())?;
    let tol = 2.0 * VOXEL_VOLUME_CM3;
    check((v - 0.5).abs() <= tol + 1e-12, format!("overlap {v} cm3, expected 0.5 +- {tol}"))?;
    let back = penetration_volume(&b, &a).map_err(|e| e.to_string())?;
    check(v == back, format!("asymmetric: {v} vs {back}"))?;
    for off in [1.5, 3.0, -2.0] {
        let d = penetration_volume(&a, &cube_cm(off)).map_err(|e| e.to_string())?;
        check(d == 0.0, format!("disjoint fixture at {off} cm gives {d}"))?;
    }
    let ball = sphere([0.004, 0.003, 0.005], 0.006, 16, 24);
    let s1 = penetration_volume(&a, &ball).map_err(|e| e.to_string())?;
    let s2 = penetration_volume(&ball, &a).map_err(|e| e.to_string())?;
    check(s1 == s2, format!("asymmetric on cube/sphere: {s1} vs {s2}"))?;
    Ok(format!("overlap {v:.4} cm3 (0.5 +- {tol:.1}); disjoint 0; symmetric"))
}

fn c6_loss_identities() -> Outcome {
    let w = LossWeights::default();
    let template = HandTemplate::standard();
    let layer = HandLayer::new(&template, DType::F64, &Device::Cpu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let gt = random_params(&mut rng, 0.4);
    let mesh = forward_kinematics(&gt, &template).unwrap();

    // Reconstruction and codebook terms.
    let p = Tensor::from_vec(gt.to_vec(), (1, PARAM_DIM), &Device::Cpu).unwrap();
    let flat: Vec<f64> = mesh.vertices.iter().flatten().copied().collect();
    let v = Tensor::from_vec(flat, (1, mesh.vertices.len(), 3), &Device::Cpu).unwrap();
    let rec = reconstruction_loss_batch(&p, &p.narrow(1, 0, POSTURE_DIM).unwrap(), &p.narrow(1, POSTURE_DIM, 6).unwrap(), &v, &layer, &w)
        .unwrap();
    let z = Tensor::from_vec((0..8).map(|i| i as f64 * 0.1).collect::<Vec<_>>(), (1, 8), &Device::Cpu).unwrap();
    let l_e = commitment_loss(&[z.clone()], &[z], w.beta).unwrap().to_scalar::<f64>().unwrap();

    // Contact terms: the object cloud holds the hand's candidate vertices
    // themselves and the object sits outside the hand.
    let cand: Vec<Vec3> = template.contact_candidates.iter().take(40).map(|&i| mesh.vertices[i as usize]).collect();
    let far = sphere([1.0, 1.0, 1.0], 0.01, 8, 12);
    let solid = MeshSolid::new(far).unwrap();
    let gt_map: Vec<usize> = (0..cand.len()).collect();
    let sets = compute_contact_sets(&mesh.vertices, &gt_map, &cand, &solid, &template.contact_candidates, 0.005).unwrap();
    let (l_c, l_m) = contact_losses(&sets, &mesh.vertices, &cand);
    let l_p = penetration_loss(&sets, &mesh.vertices, &PointGrid::new(&cand, 0.005));
    let values = [
        ("L_posture", rec.posture.to_scalar::<f64>().unwrap()),
        ("L_position", rec.position.to_scalar::<f64>().unwrap()),
        ("L_v", rec.vertices.to_scalar::<f64>().unwrap()),
        ("L_R", rec.total.to_scalar::<f64>().unwrap()),
        ("L_E", l_e),
        ("L_c", l_c),
        ("L_p", l_p),
    ];
    for (name, value) in values {
        check(value == 0.0, format!("{name} = {value:e} for a correct prediction"))?;
    }
    check(l_m == 1.0, format!("L_m = {l_m} for a correct prediction, expected its optimum 1"))?;

    // L_m stays in [0, 1] for arbitrary predictions.
    for _ in 0..50 {
        let q = random_params(&mut rng, 0.6);
        let verts = forward_kinematics(&q, &template).unwrap().vertices;
        let sub: Vec<usize> = (0..cand.len()).filter(|_| rng.random_bool(0.5)).collect();
        let s = compute_contact_sets(&verts, &sub, &cand, &solid, &template.contact_candidates, 0.005).unwrap();
        let (_, m) = contact_losses(&s, &verts, &cand);
        check((0.0..=1.0).contains(&m), format!("L_m = {m} outside [0, 1]"))?;
    }

    // Weighted sum against hand-computed values.
    let c = LossComponents { reconstruction: 0.7, codebook: 0.2, contact_map: 0.4, contact: 0.003, penetration: 0.02 };
    let expected = 0.7 + 0.2 + (-50.0 * 0.4) + 1500.0 * 0.003 + 5.0 * 0.02;
    let got = total_loss(&c, &w).unwrap();
    check((got - expected).abs() < 1e-12, format!("total {got} vs {expected}"))?;
    let better = LossComponents { contact_map: 0.9, ..c };
    check(total_loss(&better, &w).unwrap() < got, "higher contact-map agreement must lower the total")?;
    check(
        (total_loss(&better, &w).unwrap() - got - (-50.0 * 0.5)).abs() < 1e-12,
        "L_m enters with weight -50",
    )?;
    Ok(format!("all penalty terms 0 and L_m = 1 at the optimum; L_m in [0,1]; weighted total {got:.4} = {expected:.4}"))
}

fn c7_diversity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut features = Vec::new();
    for c in 0..20 {
        let center: Vec<f64> = (0..6).map(|k| if k == c % 6 { 10.0 * (1 + c / 6) as f64 } else { 0.0 }).collect();
        for _ in 0..10 {
            features.push(center.iter().map(|x| x + rng.random_range(-0.01..0.01)).collect::<Vec<_>>());
        }
    }
    let (h, size) = diversity(&features, 20, 7).map_err(|e| e.to_string())?;
    let ln20 = 20f64.ln();
    check((h - ln20).abs() <= 0.01, format!("entropy {h}, expected ln 20 = {ln20:.4}"))?;
    check(size >= 0.0, "negative cluster size")?;
    let same = vec![vec![1.0, 2.0, 3.0]; 40];
    let (h0, _) = diversity(&same, 20, 7).map_err(|e| e.to_string())?;
    check(h0 == 0.0, format!("identical grasps give entropy {h0}"))?;
    Ok(format!("20 clusters: H = {h:.4} (ln 20 = {ln20:.4}); identical: H = {h0}"))
}

fn enumerate(vocab: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &s in vocab {
        out = out.into_iter().flat_map(|p| (0..s).map(move |t| [p.clone(), vec![t]].concat())).collect();
    }
    out
}

fn c8_prior() -> Outcome {
    let vocab = [3usize, 4, 2, 4];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let corpus: Vec<IndexSequence> = (0..40)
        .map(|_| IndexSequence {
            object: rng.random_range(0..3),
            parts: vec![rng.random_range(0..4), rng.random_range(0..2), rng.random_range(0..2)],
        })
        .collect();
    let cfg = PriorConfig { width: 16, layers: 2, epochs: 20, batch_size: 8, learning_rate: 1e-2, seed: 8 };
    let (prior, _) = fit_prior(&corpus, &vocab, &cfg).map_err(|e| e.to_string())?;
    let mass: f64 = enumerate(&vocab)
        .iter()
        .map(|t| {
            prior
                .sequence_logprob(&IndexSequence { object: t[0], parts: t[1..].to_vec() })
                .unwrap()
                .exp()
        })
        .sum();
    check((mass - 1.0).abs() <= 1e-4, format!("total mass {mass}"))?;

    // Causality: changing tokens at positions > i leaves conditional i unchanged.
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let tokens: Vec<usize> = vocab.iter().map(|&s| rng.random_range(0..s)).collect();
        let i = rng.random_range(0..vocab.len() - 1);
        let mut other = tokens.clone();
        for (j, t) in other.iter_mut().enumerate().skip(i + 1) {
            *t = (*t + 1 + rng.random_range(0..vocab[j] - 1)) % vocab[j];
        }
        let a = prior.conditionals(&tokens).unwrap();
        let b = prior.conditionals(&other).unwrap();
        for k in 0..=i {
            for (x, y) in a[k].iter().zip(&b[k]) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("future tokens move past conditionals by {worst:e}"))?;

    // Degenerate corpus.
    let one = IndexSequence { object: 2, parts: vec![1, 0, 3] };
    let degenerate = vec![one.clone(); 32];
    let cfg = PriorConfig { width: 16, layers: 2, epochs: 60, batch_size: 8, learning_rate: 1e-2, seed: 9 };
    let vocab2 = [3usize, 4, 2, 4];
    let (prior, history) = fit_prior(&degenerate, &vocab2, &cfg).map_err(|e| e.to_string())?;
    let nll = *history.last().unwrap();
    check(nll < 0.05, format!("degenerate corpus NLL {nll}"))?;
    let untrained = PriorModel::new(&vocab2, &cfg).map_err(|e| e.to_string())?;
    check(prior.sequence_logprob(&one).unwrap() > untrained.sequence_logprob(&one).unwrap(), "training did not help")?;
    Ok(format!("mass {mass:.6}; causality max drift {worst:.1e} over 100 contexts; degenerate NLL {nll:.4}"))
}

/// Trained smoke run shared by criteria 9 and 10.
struct Smoke {
    cfg: RunConfig,
    data: partgrasp::Dataset,
    model: GraspModel,
    prior: PriorModel,
    first_lv: f64,
    last_lv: f64,
    train_seconds: f64,
    datagen_seconds: f64,
}

fn smoke_config() -> RunConfig {
    let mut cfg = RunConfig { seed: 1, ..Default::default() };
    cfg.datagen = DatagenConfig { seed: 1, ..Default::default() };
    cfg.train.train_points = 256;
    cfg
}

fn train_smoke() -> Result<Smoke, String> {
    let cfg = smoke_config();
    let t0 = Instant::now();
    let data = generate_corpus(&cfg.datagen).map_err(|e| e.to_string())?;
    let datagen_seconds = t0.elapsed().as_secs_f64();
    // PARTGRASP_ACCEPTANCE_DIR keeps the run for inspection.
    let temp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = std::env::var_os("PARTGRASP_ACCEPTANCE_DIR").map_or(temp.path().to_path_buf(), Into::into);
    let t1 = Instant::now();
    let summary = run_training(&cfg, &data, &dir, false).map_err(|e| e.to_string())?;
    let train_seconds = t1.elapsed().as_secs_f64();
    let (model, prior) = partgrasp::load_trained(&dir).map_err(|e| e.to_string())?;
    Ok(Smoke {
        first_lv: summary.history.first().map_or(f64::NAN, |s| s.vertices),
        last_lv: summary.history.last().map_or(f64::NAN, |s| s.vertices),
        cfg,
        data,
        model,
        prior,
        train_seconds,
        datagen_seconds,
    })
}

fn valid_mesh(mesh: &HandMesh, template_faces: usize) -> bool {
    mesh.faces.len() == template_faces && mesh.vertices.iter().flatten().all(|x| x.is_finite())
}

fn c9_end_to_end(smoke: &Smoke) -> Outcome {
    let start = Instant::now();
    let s = smoke;
    check(s.data.len() == 512, format!("corpus has {} samples", s.data.len()))?;
    let drop = 1.0 - s.last_lv / s.first_lv;
    let solids: Vec<MeshSolid> = s.data.objects.iter().map(|o| o.solid().unwrap()).collect();
    let mut meshes = Vec::new();
    let mut distinct_min = usize::MAX;
    let per_object = 4;
    for (i, o) in s.data.objects.iter().enumerate() {
        let cloud = sample_cloud(o, s.cfg.train.train_points, i as u64);
        let mut seqs = BTreeSet::new();
        for k in 0..per_object {
            let opts = SampleOptions { seed: partgrasp::derive_seed(100 + i as u64, k), ..Default::default() };
            let g = s.model.generate_grasp(&s.prior, &cloud, &opts).map_err(|e| e.to_string())?;
            seqs.insert(g.indices.parts.clone());
            meshes.push((g.mesh, i));
        }
        distinct_min = distinct_min.min(seqs.len());
    }
    let pairs: Vec<(&HandMesh, &MeshSolid)> = meshes.iter().map(|(m, i)| (m, &solids[*i])).collect();
    let ratio = contact_ratio(&pairs, s.cfg.train.tau).map_err(|e| e.to_string())?;
    let total = s.datagen_seconds + s.train_seconds + start.elapsed().as_secs_f64();
    let summary = format!(
        "L_v {:.4} -> {:.4} ({:.1}% drop); contact ratio {ratio:.1}% over {} samples; min distinct sequences per object {distinct_min}; run {:.1} min",
        s.first_lv,
        s.last_lv,
        100.0 * drop,
        meshes.len(),
        total / 60.0
    );
    check(drop >= 0.5, format!("L_v drop below 50%: {summary}"))?;
    check(ratio >= 90.0, format!("contact ratio below 90%: {summary}"))?;
    check(distinct_min >= 2, format!("an object has fewer than 2 distinct sequences: {summary}"))?;
    check(total < 30.0 * 60.0, format!("over 30 minutes: {summary}"))?;
    Ok(summary)
}

fn sample_cloud(o: &partgrasp::datagen::SyntheticObject, n: usize, seed: u64) -> Vec<Vec3> {
    if n == 0 || n >= o.cloud.len() {
        return o.cloud.clone();
    }
    partgrasp::mask_points(&o.cloud, 1.0 - n as f64 / o.cloud.len() as f64, seed).unwrap()
}

fn c10_masked(smoke: &Smoke) -> Outcome {
    let s = smoke;
    let faces = s.model.template().faces.len();
    let mut count = 0;
    for ratio in [0.5, 0.9] {
        for (i, o) in s.data.objects.iter().enumerate().take(16) {
            let cloud = sample_cloud(o, s.cfg.train.train_points, i as u64);
            let opts = SampleOptions { mask_ratio: ratio, seed: i as u64, ..Default::default() };
            let g = s.model.generate_grasp(&s.prior, &cloud, &opts).map_err(|e| format!("mask {ratio}: {e}"))?;
            check(valid_mesh(&g.mesh, faces), format!("mask {ratio}, object {i}: invalid mesh"))?;
            g.params.check_finite().map_err(|e| e.to_string())?;
            count += 1;
        }
    }
    Ok(format!("{count} masked samples (ratios 0.5, 0.9) give finite meshes with template topology"))
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Outcome, failures: &mut Vec<usize>) {
    if !selected(n) {
        return;
    }
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => println!("ACCEPTANCE {n:>2} PASS {name}: {msg} [{secs:.1}s]"),
        Err(msg) => {
            println!("ACCEPTANCE {n:>2} FAIL {name}: {msg} [{secs:.1}s]");
            failures.push(n);
        }
    }
}

/// Positional numeric arguments restrict the run to those criteria.
fn selected(n: usize) -> bool {
    let chosen: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    chosen.is_empty() || chosen.contains(&n)
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failures = Vec::new();
    run(1, "quality-index audit", c1_quality_index, &mut failures);
    run(2, "quantizer oracle", c2_quantizer_oracle, &mut failures);
    run(3, "gradient checks", c3_gradient_checks, &mut failures);
    run(4, "straight-through and stage isolation", c4_straight_through_and_isolation, &mut failures);
    run(5, "geometry oracles", c5_geometry, &mut failures);
    run(6, "loss identities", c6_loss_identities, &mut failures);
    run(7, "diversity ceiling", c7_diversity, &mut failures);
    run(8, "prior correctness", c8_prior, &mut failures);
    if !selected(9) && !selected(10) {
        return finish(failures);
    }
    let smoke = catch_unwind(train_smoke).unwrap_or_else(|_| Err("training panicked".into()));
    match &smoke {
        Ok(s) => {
            run(9, "end-to-end smoke", || c9_end_to_end(s), &mut failures);
            run(10, "masked-input sampling", || c10_masked(s), &mut failures);
        }
        Err(e) => {
            println!("ACCEPTANCE  9 FAIL end-to-end smoke: {e}");
            println!("ACCEPTANCE 10 FAIL masked-input sampling: no trained model ({e})");
            failures.extend([9, 10]);
        }
    }
    finish(failures);
}

fn finish(failures: Vec<usize>) {
    if failures.is_empty() {
        let filtered = std::env::args().skip(1).any(|a| a.parse::<usize>().is_ok());
        println!("acceptance: all {} criteria pass", if filtered { "selected" } else { "10" });
    } else {
        println!("acceptance: failing criteria {failures:?}");
        std::process::exit(1);
    }
}
