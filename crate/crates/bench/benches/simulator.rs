use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stacksim::model::ArrayShape;
use stacksim::simulator::{simulate, Dataflow, Matrix, SimConfig};

fn simulator(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = Matrix::random(64, 256, 8, &mut rng);
    let b = Matrix::random(256, 64, 8, &mut rng);
    let os = SimConfig::new(ArrayShape::planar(32, 32).unwrap(), Dataflow::Os);
    let dos = SimConfig::new(ArrayShape::new(16, 16, 4).unwrap(), Dataflow::Dos);
    c.bench_function("simulate_os_32x32", |bn| bn.iter(|| simulate(&os, black_box(&a), black_box(&b))));
    c.bench_function("simulate_dos_16x16x4", |bn| bn.iter(|| simulate(&dos, black_box(&a), black_box(&b))));
}

criterion_group!(benches, simulator);
criterion_main!(benches);
