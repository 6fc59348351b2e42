use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tiltwell::{microcanonical_otoc, position_elements, solve, thermal_otoc, Convention};
use tiltwell_bench::{eigensystem, elements, model_i, options, times, GRID_SIZES};

fn eigensolve(c: &mut Criterion) {
    let spec = model_i(30.0);
    let mut group = c.benchmark_group("eigensolve");
    group.sample_size(10);
    for n in GRID_SIZES {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| solve(black_box(&spec), &options(n)).unwrap())
        });
    }
    group.finish();
}

fn matrix_elements(c: &mut Criterion) {
    let eig = eigensystem();
    c.bench_function("position_elements/k100", |b| {
        b.iter(|| position_elements(black_box(&eig), 100, Convention::Half).unwrap())
    });
}

fn otoc(c: &mut Criterion) {
    let set = elements(&eigensystem());
    let times = times();
    let mut group = c.benchmark_group("otoc");
    for m in [0, 20, 50] {
        group.bench_with_input(BenchmarkId::new("microcanonical", m), &m, |b, &m| {
            b.iter(|| microcanonical_otoc(black_box(&set), m, &times).unwrap())
        });
    }
    group.sample_size(10);
    group.bench_function("thermal/beta0.1", |b| b.iter(|| thermal_otoc(black_box(&set), 0.1, &times).unwrap()));
    group.finish();
}

criterion_group!(kernels, eigensolve, matrix_elements, otoc);
criterion_main!(kernels);
