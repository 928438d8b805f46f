use std::hint::black_box;

use cfprop_bench::walker_preston;
use cfprop_core::{builtin_scheme, expm_action, step, FftCounter, KrylovConfig, WaveVector, SCHEME_NAMES};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn kinetic(c: &mut Criterion) {
    let mut group = c.benchmark_group("kinetic");
    for n in [64, 128, 256] {
        let (model, u0, cfg) = walker_preston(n);
        let grid = model.grid();
        let eigs = grid.kinetic_eigenvalues(cfg.mu);
        let diag = model.potential_at(0.0);
        let mut out = WaveVector::zeros(n);
        let mut counter = FftCounter::new();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| grid.apply_shifted_kinetic(black_box(&u0), &eigs, 1.0, &diag, &mut out, &mut counter))
        });
    }
    group.finish();
}

fn krylov(c: &mut Criterion) {
    let mut group = c.benchmark_group("expm_action");
    let (model, u0, cfg) = walker_preston(64);
    let grid = model.grid();
    let eigs = grid.kinetic_eigenvalues(cfg.mu);
    let diag = model.potential_at(0.0);
    for tau in [2.0, 10.0, 40.0] {
        let kcfg = KrylovConfig::with_tol(1e-12);
        group.bench_with_input(BenchmarkId::from_parameter(tau), &tau, |b, &tau| {
            let mut counter = FftCounter::new();
            b.iter(|| {
                let mut apply = |x: &[_], y: &mut [_]| grid.apply_shifted_kinetic(x, &eigs, 1.0, &diag, y, &mut counter);
                expm_action(&mut apply, black_box(&u0), tau, &kcfg)
            })
        });
    }
    group.finish();
}

fn schemes(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    let (model, u0, cfg) = walker_preston(64);
    let tau = 10.0 * cfg.period() / 512.0;
    let kcfg = KrylovConfig::with_tol(1e-12);
    for name in SCHEME_NAMES {
        let scheme = builtin_scheme(name).expect("built-in scheme");
        group.bench_function(name, |b| {
            let mut counter = FftCounter::new();
            b.iter(|| step(&scheme, black_box(&u0), 100.0, tau, &model, &kcfg, &mut counter))
        });
    }
    group.finish();
}

criterion_group!(benches, kinetic, krylov, schemes);
criterion_main!(benches);
