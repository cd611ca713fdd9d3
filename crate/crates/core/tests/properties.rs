use std::f64::consts::PI;

use borel_unfold::geometry::{inverse_time, time_coord};
use borel_unfold::line_calculus::{
    convolve, convolve_dirac, make_line_function, norm_int, norm_sup, resample_offset,
};
use borel_unfold::series_core::{eval_truncated, formal_borel, formal_solution, mobius_fourier_coeffs, FourierSide};
use borel_unfold::transforms::{borel_monomial, chi_eval};
use borel_unfold::{
    DiracAtom, LineFunction, MultiIndex, PowerSeries1, PowerSeries2, Side, SqrtEps, StripFunction, SystemSpec,
    TermKind, VecPoly, C64,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn cplx() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn sqrt_eps() -> impl Strategy<Value = SqrtEps> {
    (0.05..0.5f64, -PI..PI).prop_map(|(r, a)| SqrtEps(C64::from_polar(r, a)))
}

// ---------- formal series ----------

#[derive(Clone, Debug)]
struct TermData {
    kind: TermKind,
    l: Vec<u32>,
    coeffs: Vec<C64>,
}

fn term(dim: usize) -> impl Strategy<Value = TermData> {
    let l = proptest::collection::vec(0u32..=2, dim);
    (0usize..3, l, proptest::collection::vec(cplx(), 4 * dim)).prop_filter_map("order", move |(k, l, coeffs)| {
        let order: u32 = l.iter().sum();
        let kind = [TermKind::M, TermKind::A, TermKind::G][k];
        let ok = match kind {
            TermKind::M => order == 2,
            TermKind::A => order == 1,
            TermKind::G => order <= 1,
        };
        ok.then_some(TermData { kind, l, coeffs })
    })
}

fn poly_of(t: &TermData, dim: usize) -> VecPoly {
    // m- and a-terms depend on ε only
    let x_deg = if t.kind == TermKind::G { 1 } else { 0 };
    let mut p = VecPoly::zero(dim, x_deg, 1);
    let mut it = t.coeffs.iter();
    for q in 0..=1 {
        for k in 0..=x_deg {
            for i in 0..dim {
                p.set(k, q, i, *it.next().unwrap() * 0.5);
            }
        }
    }
    p
}

fn spec_strategy() -> impl Strategy<Value = (SystemSpec, Vec<TermData>)> {
    (1usize..=2).prop_flat_map(|dim| {
        (
            proptest::collection::vec(cplx(), dim * dim),
            proptest::collection::vec(cplx(), dim * dim),
            proptest::collection::vec(term(dim), 1..4),
        )
            .prop_map(move |(m0, m1, terms)| {
                let mut a = DMatrix::from_fn(dim, dim, |i, j| m0[i * dim + j] * 0.3);
                for i in 0..dim {
                    a[(i, i)] += c(1.0 + i as f64, 0.5);
                }
                let b = DMatrix::from_fn(dim, dim, |i, j| m1[i * dim + j] * 0.3);
                let mut spec = SystemSpec::new(dim, vec![a, b]);
                for t in &terms {
                    spec.add_term(t.kind, MultiIndex(t.l.clone()), poly_of(t, dim)).unwrap();
                }
                (spec, terms)
            })
    })
}

/// Derivative in x of (x²−ε)·Σ y_{kj}x^kε^j.
fn eval_truncated_dx(s: &PowerSeries2, x: C64, eps: C64) -> Vec<C64> {
    let n = s.order();
    let mut body = vec![c(0.0, 0.0); s.dim()];
    let mut dbody = vec![c(0.0, 0.0); s.dim()];
    for d in 0..=n {
        for j in 0..=d {
            let k = d - j;
            let w = x.powu(k as u32) * eps.powu(j as u32);
            let dw = if k == 0 { c(0.0, 0.0) } else { x.powu(k as u32 - 1) * eps.powu(j as u32) * k as f64 };
            for (i, v) in s.get(k, j).iter().enumerate() {
                body[i] += v * w;
                dbody[i] += v * dw;
            }
        }
    }
    (0..s.dim()).map(|i| 2.0 * x * body[i] + (x * x - eps) * dbody[i]).collect()
}

/// Bivariate Taylor coefficients of a polynomial of degree < k in each variable,
/// from samples on the torus |x| = |ε| = 1.
fn torus_coefficients<F: Fn(C64, C64) -> Vec<C64>>(f: F, k: usize, dim: usize) -> Vec<Vec<Vec<C64>>> {
    let roots: Vec<C64> = (0..k).map(|a| C64::from_polar(1.0, 2.0 * PI * a as f64 / k as f64)).collect();
    let samples: Vec<Vec<Vec<C64>>> = roots.iter().map(|&x| roots.iter().map(|&e| f(x, e)).collect()).collect();
    let mut out = vec![vec![vec![c(0.0, 0.0); dim]; k]; k];
    for p in 0..k {
        for q in 0..k {
            for a in 0..k {
                for b in 0..k {
                    let w = roots[(a * p) % k].conj() * roots[(b * q) % k].conj();
                    for i in 0..dim {
                        out[p][q][i] += samples[a][b][i] * w;
                    }
                }
            }
            for v in out[p][q].iter_mut() {
                *v /= (k * k) as f64;
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn formal_borel_is_linear(
        s1 in proptest::collection::vec(cplx(), 8),
        s2 in proptest::collection::vec(cplx(), 8),
        a in cplx(),
        b in cplx(),
    ) {
        let mut s1 = s1;
        let mut s2 = s2;
        s1[0] = c(0.0, 0.0);
        s2[0] = c(0.0, 0.0);
        let mix: Vec<C64> = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
        let lhs = formal_borel(&PowerSeries1::new(mix).unwrap()).unwrap();
        let b1 = formal_borel(&PowerSeries1::new(s1).unwrap()).unwrap();
        let b2 = formal_borel(&PowerSeries1::new(s2).unwrap()).unwrap();
        for (j, v) in lhs.coeffs().iter().enumerate() {
            let r = a * b1.coeffs()[j] + b * b2.coeffs()[j];
            prop_assert!((v - r).norm() <= 1e-14 * (1.0 + r.norm()));
        }
    }

    #[test]
    fn formal_solution_ignores_term_order((spec, terms) in spec_strategy(), order in 0usize..6) {
        let dim = spec.dim;
        let mut rev = SystemSpec::new(dim, spec.m_coeffs.clone());
        for t in terms.iter().rev() {
            rev.add_term(t.kind, MultiIndex(t.l.clone()), poly_of(t, dim)).unwrap();
        }
        let a = formal_solution(&spec, order).unwrap();
        let b = formal_solution(&rev, order).unwrap();
        for d in 0..=order {
            for j in 0..=d {
                let (u, v) = (a.get(d - j, j), b.get(d - j, j));
                for (x, y) in u.iter().zip(v) {
                    prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                    prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
        }
    }

    #[test]
    fn truncated_solution_satisfies_equation_to_its_order((spec, _) in spec_strategy(), order in 0usize..=6) {
        let y = formal_solution(&spec, order).unwrap();
        let dim = spec.dim;
        let residual = |x: C64, eps: C64| -> Vec<C64> {
            let yv = eval_truncated(&y, x, eps);
            let dy = eval_truncated_dx(&y, x, eps);
            let rhs = spec.eval_rhs(x, &yv, eps);
            (0..dim).map(|i| (x * x - eps) * dy[i] - rhs[i]).collect()
        };
        // the residual has degree ≤ 2(order+3)+3 in x and in ε
        let k = 2 * order + 12;
        let coeffs = torus_coefficients(residual, k, dim);
        let scale = coeffs.iter().flatten().flatten().map(|v| v.norm()).fold(1.0, f64::max);
        // ŷ carries the factor (x²−ε), so every term of total degree ≤ order+1 cancels
        for p in 0..=order + 1 {
            for q in 0..=order + 1 - p {
                for v in &coeffs[p][q] {
                    prop_assert!(v.norm() <= 1e-12 * scale, "coefficient ({p},{q}) = {v}");
                }
            }
        }
    }

    #[test]
    fn fourier_constant_term_is_value_at_root(
        poly in proptest::collection::vec(cplx(), 1..6),
        s in sqrt_eps(),
    ) {
        let f = |x: C64| poly.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * x + a);
        for (root, side) in [(s.value(), FourierSide::R), (-s.value(), FourierSide::L)] {
            // Taylor data at the root by repeated synthetic division
            let mut rem = poly.clone();
            let mut taylor = Vec::new();
            for _ in 0..poly.len() {
                let mut acc = c(0.0, 0.0);
                let mut quotient = vec![c(0.0, 0.0); rem.len().saturating_sub(1)];
                for (i, a) in rem.iter().enumerate().rev() {
                    acc = acc * root + a;
                    if i > 0 {
                        quotient[i - 1] = acc;
                    }
                }
                taylor.push(acc);
                rem = quotient;
            }
            let n = taylor.len() - 1;
            let a = mobius_fourier_coeffs(&PowerSeries1::new(taylor).unwrap(), s.value(), side, n).unwrap();
            let direct = f(root);
            prop_assert!((a[0] - direct).norm() <= 1e-13 * (1.0 + direct.norm()));
        }
    }
}

// ---------- geometry ----------

fn outside_point() -> impl Strategy<Value = (SqrtEps, C64, i64)> {
    (sqrt_eps(), 1.3..6.0f64, -PI..PI, -2i64..=2).prop_map(|(s, r, a, k)| (s, C64::from_polar(r * s.abs(), a), k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn time_coord_is_odd((s, x, k) in outside_point()) {
        let t = time_coord(borel_unfold::SheetPoint::on_sheet(x, k), s).unwrap();
        let tm = time_coord(borel_unfold::SheetPoint::on_sheet(-x, -k), s).unwrap();
        // the mirrored point sits on the mirrored branch unless w lies on the cut of Log
        let w = (x - s.value()) / (x + s.value());
        prop_assume!(w.im.abs() > 1e-9 * w.norm());
        prop_assert!((t + tm).norm() <= 1e-12 * t.norm().max(1.0));
    }

    #[test]
    fn inverse_time_round_trip((s, x, k) in outside_point()) {
        let t = time_coord(borel_unfold::SheetPoint::on_sheet(x, k), s).unwrap();
        let p = inverse_time(t, s).unwrap();
        prop_assert_eq!(p.sheet, k);
        prop_assert!((p.x - x).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn inverse_time_is_periodic((s, x, k) in outside_point()) {
        let t = time_coord(borel_unfold::SheetPoint::on_sheet(x, k), s).unwrap();
        let p0 = inverse_time(t, s).unwrap();
        let p1 = inverse_time(t + s.period(), s).unwrap();
        prop_assert_eq!(p1.sheet, p0.sheet + 1);
        prop_assert!((p1.x - p0.x).norm() <= 1e-12 * p0.x.norm());
    }
}

// ---------- line calculus ----------

fn bump() -> impl Strategy<Value = (C64, f64, f64)> {
    (cplx(), -1.5..1.5f64, 0.8..3.0f64)
}

fn bump_line(bumps: &[(C64, f64, f64)], alpha: f64, n: usize) -> LineFunction {
    let dir = C64::from_polar(1.0, alpha);
    make_line_function(
        |xi| {
            let u = (xi / dir).re;
            vec![bumps.iter().map(|(a, m, w)| a * (-w * (u - m) * (u - m)).exp()).sum()]
        },
        c(0.0, 0.0),
        alpha,
        10.0,
        n,
        false,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn young_inequalities(
        p in proptest::collection::vec(bump(), 1..4),
        q in proptest::collection::vec(bump(), 1..4),
        alpha in 0.0..PI,
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
    ) {
        let phi = bump_line(&p, alpha, 401);
        let psi = bump_line(&q, alpha, 401);
        let conv = convolve(&phi, &psi).unwrap();
        // Re(e^{iα}A) = −a < b = Re(e^{iα}B)
        let wa = C64::from_polar(-a, -alpha);
        let wb = C64::from_polar(b, -alpha);
        let slack = 1.0 + 1e-9;
        let sup_conv = norm_sup(&conv, wa, wb).unwrap();
        let bound_sup = norm_sup(&phi, wa, wb).unwrap() * norm_int(&psi, wa, wb).unwrap();
        prop_assert!(sup_conv <= bound_sup * slack, "{sup_conv} > {bound_sup}");
        let int_conv = norm_int(&conv, wa, wb).unwrap();
        let bound_int = norm_int(&phi, wa, wb).unwrap() * norm_int(&psi, wa, wb).unwrap();
        prop_assert!(int_conv <= bound_int * slack, "{int_conv} > {bound_int}");
    }

    #[test]
    fn convolution_is_associative(
        p in proptest::collection::vec(bump(), 1..3),
        q in proptest::collection::vec(bump(), 1..3),
        r in proptest::collection::vec(bump(), 1..3),
        alpha in 0.0..PI,
    ) {
        let (x, y, z) = (bump_line(&p, alpha, 401), bump_line(&q, alpha, 401), bump_line(&r, alpha, 401));
        let left = convolve(&convolve(&x, &y).unwrap(), &z).unwrap();
        let right = convolve(&x, &convolve(&y, &z).unwrap()).unwrap();
        let scale = left.values().iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (l, r) in left.values().iter().zip(right.values()) {
            prop_assert!((l - r).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn dirac_shifts_compose(
        p in proptest::collection::vec(bump(), 1..3),
        la in cplx(), wa in cplx(), lb in cplx(), wb in cplx(),
    ) {
        let phi = bump_line(&p, 0.7, 81);
        let a = DiracAtom::new(la, vec![wa]).unwrap();
        let b = DiracAtom::new(lb, vec![wb]).unwrap();
        let lhs = convolve_dirac(&a, &convolve_dirac(&b, &phi).unwrap()).unwrap();
        let rhs = convolve_dirac(&a.compose(&b).unwrap(), &phi).unwrap();
        prop_assert!((lhs.base - rhs.base).norm() <= 4.0 * f64::EPSILON * (la.norm() + lb.norm()));
        for (l, r) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((l - r).norm() <= 4.0 * f64::EPSILON * l.norm());
        }
    }

    #[test]
    fn resample_at_stored_offset_is_exact(s in sqrt_eps(), k in -2i32..=2, shift in cplx()) {
        let alpha = s.arg() + PI / 2.0;
        let strip = StripFunction::from_evaluator(|z| vec![(shift * z).exp() / (1.0 + z * z * 0.1)], alpha, s, 4.0, 41, false)
            .unwrap();
        let (lf, r) = resample_offset(&strip, strip.offset(k)).unwrap();
        prop_assert_eq!(&lf, strip.line(k).unwrap());
        prop_assert_eq!(r, 0.0);
    }
}

// ---------- transforms ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn chi_sides_are_related(s in sqrt_eps(), xi in cplx()) {
        let xi = xi * 3.0 * s.abs();
        let ratio = xi / (2.0 * s.value());
        prop_assume!((ratio - C64::new(ratio.re.round(), 0.0)).norm() > 1e-3);
        let p = chi_eval(xi, Side::Plus, s, 0.0).unwrap();
        let m = chi_eval(xi, Side::Minus, s, 0.0).unwrap();
        let e = (xi * PI * C64::i() / s.value()).exp();
        prop_assert!((m - e * p).norm() <= 1e-12 * (1.0 + m.norm()));
        prop_assert!((p - m - 1.0).norm() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn chi_at_zero_eps_is_heaviside_pair(xi in cplx(), alpha in -PI..PI) {
        let z = SqrtEps::zero();
        let p = chi_eval(xi, Side::Plus, z, alpha).unwrap();
        let m = chi_eval(xi, Side::Minus, z, alpha).unwrap();
        prop_assert_eq!(m, p - 1.0);
    }

    #[test]
    fn monomial_transform_has_radial_limit(a in 0u32..4, b in 0u32..4, arg in -PI..PI) {
        prop_assume!(a + b >= 1);
        let d = (a + b - 1) as usize;
        let limit = 1.0 / (1..=d).map(|v| v as f64).product::<f64>();
        let s0 = C64::from_polar(1.0, arg);
        let mut prev = f64::INFINITY;
        for j in 4..12 {
            let s = SqrtEps(s0 * 2f64.powi(-j));
            let m = borel_monomial(a, b, s, Side::Plus).unwrap();
            let xi = c(0.3, 0.2);
            let err = (m.poly_eval(xi) - xi.powu(d as u32) * limit).norm();
            prop_assert!(err <= prev * 1.01 + 1e-15);
            prev = err;
        }
        prop_assert!(prev < 1e-2);
    }
}
