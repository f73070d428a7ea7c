use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use origami_entropy::orbit::linspace;
use origami_entropy::{
    count_paths, entropy_enclosure, equilateral_matrix, f_truncated, scan, Family, DEFAULT_ROOT_TOL,
};
use origami_entropy_bench::stratum;

fn truncated_sums(c: &mut Criterion) {
    let m = equilateral_matrix();
    let sigma = 3f64.sqrt();
    let mut group = c.benchmark_group("f_truncated");
    for cutoff in [25usize, 100, 400] {
        group.bench_with_input(BenchmarkId::from_parameter(cutoff), &cutoff, |b, &n| {
            b.iter(|| f_truncated(black_box(&m), sigma, black_box(4.35), n).unwrap())
        });
    }
    group.finish();
}

fn entropy_solve(c: &mut Criterion) {
    let x = stratum(Family::L);
    let m = equilateral_matrix();
    c.bench_function("entropy_enclosure/N=100", |b| {
        b.iter(|| entropy_enclosure(&x, black_box(&m), 100, DEFAULT_ROOT_TOL).unwrap())
    });
}

fn orbit_and_paths(c: &mut Criterion) {
    let x = stratum(Family::L);
    let m = equilateral_matrix();
    let mut group = c.benchmark_group("orbit");
    group.sample_size(10);
    let s = linspace(-0.5, 0.5, 5);
    let u = linspace(-0.1, 0.1, 5);
    group.bench_function("scan 5x5", |b| {
        b.iter(|| scan(&x, &m, &s, &u, 1e-10).unwrap())
    });
    group.bench_function("count_paths T=8", |b| {
        b.iter(|| count_paths(&x, &m, 8.0, 1e-3).unwrap())
    });
    group.finish();
}

criterion_group!(benches, truncated_sums, entropy_solve, orbit_and_paths);
criterion_main!(benches);
