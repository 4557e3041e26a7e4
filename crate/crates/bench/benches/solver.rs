use std::hint::black_box;

use benney_bench::preset_state;
use benney_core::{cfl_dt, predict_blowup, step_central, step_riemann};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for cells in [256, 1024] {
        let state = preset_state("perturbed", cells);
        let dt = cfl_dt(&state, 0.9);
        group.bench_with_input(BenchmarkId::new("central", cells), &state, |b, s| {
            b.iter(|| black_box(step_central(black_box(s), dt)))
        });
        group.bench_with_input(BenchmarkId::new("riemann", cells), &state, |b, s| {
            b.iter(|| black_box(step_riemann(black_box(s), dt).unwrap()))
        });
    }
    group.finish();
}

fn bench_prediction(c: &mut Criterion) {
    let state = preset_state("perturbed", 512);
    c.bench_function("predict_blowup_512", |b| {
        b.iter(|| black_box(predict_blowup(black_box(&state)).unwrap()))
    });
}

criterion_group!(benches, bench_steps, bench_prediction);
criterion_main!(benches);
