use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qflow_bench::cosine_pair;
use qflow_core::{dirichlet_energy, minimize_step, SolverOptions};

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("minimize_step");
    let opts = SolverOptions::default();
    for res in [51usize, 201] {
        let f = cosine_pair(res);
        group.bench_with_input(BenchmarkId::from_parameter(res), &f, |b, f| {
            b.iter(|| minimize_step(black_box(f), 0.25 / 64.0, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_energy(c: &mut Criterion) {
    let f = cosine_pair(201);
    c.bench_function("dirichlet_energy/201", |b| b.iter(|| dirichlet_energy(black_box(&f))));
}

criterion_group!(benches, bench_step, bench_energy);
criterion_main!(benches);
