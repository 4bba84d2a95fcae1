//! Timings for the three workhorse pipelines: the dominant-eigendata solve,
//! the exact distribution dynamic program, and rate-function construction
//! and evaluation, plus the orbit sampler throughput.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use sftlab::{
    build_rate_function, exact_dist, lattice_check, rpf_solve, sample_orbit, split_seed,
    TransferMatrix, DEFAULT_Q_MAX,
};
use sftlab_bench::{golden_fixture, solve_chain, wide_fixture};

fn bench_rpf_solve(c: &mut Criterion) {
    let (golden, phi, _) = golden_fixture();
    let (wide, wide_phi) = wide_fixture();
    let mut group = c.benchmark_group("rpf_solve");
    group.bench_function("golden_mean", |b| {
        b.iter_batched(
            || TransferMatrix::from_block_fn(&golden, phi.clone()),
            |tm| rpf_solve(black_box(&tm)).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("full_shift_8", |b| {
        b.iter_batched(
            || TransferMatrix::from_block_fn(&wide, wide_phi.clone()),
            |tm| rpf_solve(black_box(&tm)).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_exact_dist(c: &mut Criterion) {
    let (golden, phi, g) = golden_fixture();
    let chain = solve_chain(&golden, &phi);
    let lattice = lattice_check(&g, DEFAULT_Q_MAX).unwrap();
    c.bench_function("exact_dist/golden_n512", |b| {
        b.iter(|| exact_dist(black_box(&chain), &lattice, 512).unwrap())
    });
}

fn bench_rate_function(c: &mut Criterion) {
    let (golden, phi, g) = golden_fixture();
    let mut group = c.benchmark_group("rate_function");
    group.bench_function("build_grid33", |b| {
        b.iter(|| build_rate_function(black_box(&golden), &phi, &g, 4.0, 33).unwrap())
    });
    let rate = build_rate_function(&golden, &phi, &g, 4.0, 33).unwrap();
    group.bench_function("eval_a09", |b| {
        b.iter(|| rate.eval(black_box(0.9)).unwrap())
    });
    group.finish();
}

fn bench_sampler(c: &mut Criterion) {
    let (golden, phi, _) = golden_fixture();
    let chain = solve_chain(&golden, &phi);
    c.bench_function("sample_orbit/golden_n4096", |b| {
        b.iter(|| sample_orbit(black_box(&chain), 4096, split_seed(7, 0)))
    });
}

criterion_group!(
    benches,
    bench_rpf_solve,
    bench_exact_dist,
    bench_rate_function,
    bench_sampler
);
criterion_main!(benches);
