use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use partgrasp::geometry::primitives::{cuboid, sphere};
use partgrasp::hand::{forward_batch, HandLayer};
use partgrasp::metrics::penetration_volume_solids;
use partgrasp::nn::ParamStore;
use partgrasp::{Codebook, DType, Device, HandParams, HandTemplate, MeshSolid};

fn quantize(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut store = ParamStore::new(DType::F32, Device::Cpu);
    let mut book = Codebook::new(&mut store, "book", 256, 64, &mut rng).unwrap();
    let queries: Vec<Vec<f64>> = (0..32).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    c.bench_function("quantize 32 x d64 against S256", |b| {
        b.iter(|| {
            for q in &queries {
                std::hint::black_box(book.quantize(q, false).unwrap());
            }
        })
    });
}

fn kinematics(c: &mut Criterion) {
    let template = HandTemplate::standard();
    let layer = HandLayer::new(&template, DType::F64, &Device::Cpu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params: Vec<HandParams> = (0..32)
        .map(|_| {
            let values: Vec<f64> = (0..partgrasp::hand::PARAM_DIM).map(|_| rng.random_range(-0.3..0.3)).collect();
            HandParams::from_slice(&values).unwrap()
        })
        .collect();
    c.bench_function("forward kinematics batch 32", |b| {
        b.iter(|| std::hint::black_box(forward_batch(&params, &layer).unwrap()))
    });
}

fn penetration(c: &mut Criterion) {
    let ball = MeshSolid::new(sphere([0.0; 3], 0.04, 24, 32)).unwrap();
    let hand = || MeshSolid::new(cuboid([0.02, -0.02, -0.02], [0.06, 0.02, 0.02], 4)).unwrap();
    c.bench_function("penetration volume sphere vs box", |b| {
        b.iter_batched(hand, |h| std::hint::black_box(penetration_volume_solids(&h, &ball)), BatchSize::SmallInput)
    });
}

criterion_group!(benches, quantize, kinematics, penetration);
criterion_main!(benches);
