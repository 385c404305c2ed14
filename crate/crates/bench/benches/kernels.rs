use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use locconv_core::convert::ConversionTarget;
use locconv_core::linalg::svd;
use locconv_core::protocols::{convert_gate, convert_gate_sampled, random_inputs};
use locconv_core::{canonical_decompose, choi_state, classify, haar_random_gate, DEFAULT_RANK_TOL};

fn linalg(c: &mut Criterion) {
    for d in [2, 4] {
        let m = haar_random_gate(1, d).unwrap().matrix().clone();
        c.bench_function(&format!("svd {0}x{0}", d * d), |b| b.iter(|| svd(black_box(&m)).unwrap()));
    }
}

fn analysis(c: &mut Criterion) {
    let g = haar_random_gate(2, 2).unwrap();
    c.bench_function("canonical_decompose", |b| b.iter(|| canonical_decompose(black_box(&g)).unwrap()));
    c.bench_function("choi_state", |b| b.iter(|| choi_state(black_box(&g)).unwrap()));
    c.bench_function("classify", |b| b.iter(|| classify(black_box(&g), DEFAULT_RANK_TOL).unwrap()));
    let g3 = haar_random_gate(3, 3).unwrap();
    c.bench_function("classify d=3", |b| b.iter(|| classify(black_box(&g3), DEFAULT_RANK_TOL).unwrap()));
}

fn protocols(c: &mut Criterion) {
    let g = haar_random_gate(4, 2).unwrap();
    let input = random_inputs(5, 1);
    for target in [ConversionTarget::Cnot, ConversionTarget::Swap] {
        c.bench_function(&format!("convert_gate exact -> {target}"), |b| {
            b.iter(|| convert_gate(black_box(&g), target, &input).unwrap())
        });
    }
    let mut group = c.benchmark_group("sampled");
    group.sample_size(10);
    group.bench_function("convert_gate 1000 samples -> cnot", |b| {
        b.iter_batched(
            || 0u64,
            |seed| convert_gate_sampled(&g, ConversionTarget::Cnot, &input[0], seed, 1000).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, linalg, analysis, protocols);
criterion_main!(benches);
