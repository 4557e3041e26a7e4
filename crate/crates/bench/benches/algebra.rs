use std::hint::black_box;

use benney_core::{
    blowup_coeffs, derivative_table, hyperbolic_roots, inverse_seed, maclane_forward,
    maclane_inverse, run_identity_suite, sample_hyperbolic, RegimeTolerance, SampleBox,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_pointwise(c: &mut Criterion) {
    let samples = sample_hyperbolic(64, 7, SampleBox::INTERIOR);
    let tol = RegimeTolerance::default();
    c.bench_function("hyperbolic_roots_64", |b| {
        b.iter(|| {
            for u in &samples {
                black_box(hyperbolic_roots(black_box(u), tol).unwrap());
            }
        })
    });
    c.bench_function("derivative_table_64", |b| {
        b.iter(|| {
            for u in &samples {
                black_box(derivative_table(black_box(u)).unwrap());
            }
        })
    });
    c.bench_function("blowup_coeffs_64", |b| {
        b.iter(|| {
            for u in &samples {
                black_box(blowup_coeffs(black_box(u)).unwrap());
            }
        })
    });
    let rs: Vec<_> = samples
        .iter()
        .map(|u| maclane_forward(u).unwrap())
        .collect();
    c.bench_function("maclane_inverse_64", |b| {
        b.iter(|| {
            for r in &rs {
                let seed = inverse_seed(r).unwrap();
                black_box(maclane_inverse(black_box(r), &seed, 0.0).unwrap());
            }
        })
    });
}

fn bench_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("identity_suite");
    group.sample_size(10);
    group.bench_function("100_samples", |b| {
        b.iter(|| black_box(run_identity_suite(100, 42)))
    });
    group.finish();
}

criterion_group!(benches, bench_pointwise, bench_suite);
criterion_main!(benches);
