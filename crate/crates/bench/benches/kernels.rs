use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ksbound::functionals::sample;
use ksbound::linalg::solve_tridiagonal;
use ksbound::spatial::helmholtz_solve;
use ksbound::timestep::{rhs_u, step};
use ksbound::{StepControl, StepperKind};
use ksbound_bench::bump;

const SIZES: [usize; 3] = [256, 1024, 4096];

fn tridiagonal(c: &mut Criterion) {
    let mut g = c.benchmark_group("tridiagonal");
    for n in SIZES {
        let lower = vec![-1.0; n - 1];
        let upper = vec![-1.0; n - 1];
        let diag = vec![3.0; n];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let mut x = rhs.clone();
                solve_tridiagonal(&lower, &diag, &upper, &mut x);
                black_box(x)
            })
        });
    }
    g.finish();
}

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("operators");
    for n in SIZES {
        let (grid, scenario, state) = bump(n, StepperKind::Imex1);
        g.bench_with_input(BenchmarkId::new("rhs_u", n), &n, |b, _| {
            b.iter(|| rhs_u(&grid, black_box(&state), &scenario.nonlinearity, scenario.advection_scheme).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("helmholtz", n), &n, |b, _| {
            b.iter(|| helmholtz_solve(&grid, black_box(&state.u)))
        });
        g.bench_with_input(BenchmarkId::new("functionals", n), &n, |b, _| {
            b.iter(|| sample(&grid, black_box(&state), &scenario.nonlinearity, scenario.variant, 20.0, 1e-4).unwrap())
        });
    }
    g.finish();
}

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    for stepper in [StepperKind::ExplicitRk, StepperKind::Imex1, StepperKind::FullyImplicit] {
        for n in [256, 1024] {
            let (grid, scenario, state) = bump(n, stepper);
            let mut control = StepControl::for_scenario(&scenario);
            control.dt = 1e-6;
            g.bench_with_input(BenchmarkId::new(format!("{stepper:?}"), n), &n, |b, _| {
                b.iter(|| step(&grid, black_box(&state), &scenario, &control).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, tridiagonal, operators, steps);
criterion_main!(benches);
