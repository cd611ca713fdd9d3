use std::f64::consts::PI;
use std::hint::black_box;

use borel_unfold::acceptance::{squared_forcing_system, upper_direction_range};
use borel_unfold::line_calculus::{convolve, convolve_xtilde, make_line_function};
use borel_unfold::solver::{apply_g, build_omega_grid, GOperator};
use borel_unfold::transforms::{laplace_line, xi_chi};
use borel_unfold::{Side, SqrtEps, StripFunction, C64};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn gaussian(xi: C64) -> Vec<C64> {
    vec![(-(xi * xi)).exp()]
}

fn bench_convolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("convolve");
    for n in [257usize, 1025] {
        let phi = make_line_function(gaussian, C64::new(0.0, 0.0), 0.4, 8.0, n, false).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &phi, |b, phi| b.iter(|| convolve(black_box(phi), phi).unwrap()));
    }
    g.finish();
}

fn bench_convolve_xtilde(c: &mut Criterion) {
    let s = SqrtEps::new(0.1, 0.0);
    let mut g = c.benchmark_group("convolve_xtilde");
    for n in [257usize, 1025] {
        let strip =
            StripFunction::from_evaluator(|z| vec![xi_chi(z, Side::Plus, s).unwrap()], PI / 2.0, s, 8.0, n, true).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &strip, |b, st| {
            b.iter(|| convolve_xtilde(black_box(st), Side::Plus).unwrap())
        });
    }
    g.finish();
}

fn bench_apply_g(c: &mut Criterion) {
    let spec = squared_forcing_system();
    let s = SqrtEps::new(0.1, 0.0);
    let grid = build_omega_grid(&spec, s, upper_direction_range(), 1.0, 1, 8.0, 513).unwrap();
    let state = GOperator::new(&spec, &grid, Side::Plus).unwrap().zero_state().unwrap();
    let once = apply_g(&spec, &grid, Side::Plus, &state).unwrap();
    c.bench_function("apply_g/513", |b| b.iter(|| apply_g(&spec, &grid, Side::Plus, black_box(&once)).unwrap()));
}

fn bench_laplace_line(c: &mut Criterion) {
    let s = SqrtEps::new(0.1, 0.0);
    let line =
        make_line_function(|z| vec![xi_chi(z, Side::Plus, s).unwrap() / (z - 1.0)], C64::new(0.0, 0.0), PI / 2.0, 8.0, 1025, true)
            .unwrap();
    let t = C64::new(0.0, -3.0);
    c.bench_function("laplace_line/1025", |b| b.iter(|| laplace_line(black_box(&line), &[], t).unwrap()));
}

criterion_group!(benches, bench_convolve, bench_convolve_xtilde, bench_apply_g, bench_laplace_line);
criterion_main!(benches);
