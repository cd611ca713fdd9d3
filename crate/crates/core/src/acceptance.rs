//! The acceptance suite A1–A11. Each check returns a [`CriterionReport`];
//! [`run_all`] runs them in order and never panics.

use crate::applications::{
    assemble_t, assemble_t_at_time, borel_pade_remainder, borel_pade_sum, confluence_table, normalization_residual,
    riccati_reduce, CenterManifold, LinearSystemSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{inverse_time, singular_offsets, z_contains, DirectionRange, SheetPoint, Side, SqrtEps};
use crate::line_calculus::{convolve, convolve_dirac, make_line_function, norm_int, norm_sup, DiracAtom, GridKind, LineFunction, StripFunction, OFFSET_LATTICE};
use crate::numerics::{c, I};
use crate::series_core::{formal_solution, MultiIndex, PowerSeries1, SystemSpec, TermKind, VecPoly};
use crate::solver::{build_omega_grid, residue_coefficients, residue_series_eval, solve_fixed_point, solve_with_retries, OmegaGrid, SolverConfig};
use crate::transforms::{
    borel_monomial, borel_unfolded_quad, chi_eval, default_quad_range, default_time_offset, laplace_line, laplace_unfolded, xi_chi,
    xi_chi_dir,
};
use crate::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const A1_TOL: f64 = 1e-6;
pub const A2_TOL: f64 = 1e-8;
pub const A3_LAPLACE_TOL: f64 = 1e-7;
pub const A3_BOREL_TOL: f64 = 1e-6;
pub const A4_RESIDUAL_TOL: f64 = 1e-8;
pub const A4_STABILITY: f64 = 0.2;
pub const A5_LINEAR_TOL: f64 = 1e-8;
pub const A5_NONLINEAR_TOL: f64 = 1e-6;
pub const A6_VALUE_TOL: f64 = 1e-6;
pub const A6_COEFF_TOL: f64 = 1e-10;
pub const A7_TOL: f64 = 1e-6;
pub const A8_FINAL_TOL: f64 = 1e-4;
pub const A9_TOL: f64 = 1e-6;
pub const A10_RESIDUAL_TOL: f64 = 1e-6;
pub const A10_IDENTITY_TOL: f64 = 1e-8;
pub const A11_TOL: f64 = 1e-12;

/// Seed of the random line pairs in A9.
pub const A9_SEED: u64 = 0x5eed_a9;

/// Outcome of one criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    /// Worst measured error (or other figure of merit) against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CriterionReport {
    fn new(id: &'static str, title: &'static str, measured: f64, tolerance: f64, extra_ok: bool, detail: String) -> Self {
        CriterionReport { id, title, passed: extra_ok && measured.is_finite() && measured < tolerance, measured, tolerance, detail }
    }

    fn failed(id: &'static str, title: &'static str, e: Error) -> Self {
        CriterionReport { id, title, passed: false, measured: f64::NAN, tolerance: f64::NAN, detail: format!("error: {e}") }
    }

    /// One line: id, PASS/FAIL, measured vs tolerance, detail.
    pub fn line(&self) -> String {
        format!(
            "{} {} {}: measured {:.3e} (tol {:.1e}) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

/// (x²−ε)u′ = u + (x²−ε): M = 1, g₀ = 1.
pub fn linear_forcing_system() -> SystemSpec {
    let mut spec = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(1.0, 0.0))]);
    spec.add_term(TermKind::G, MultiIndex::zero(1), VecPoly::constant(&[c(1.0, 0.0)])).expect("dimensions match");
    spec
}

/// (x²−ε)y′ = y + 2xy + (x²−ε)², satisfied by y = (x²−ε)u.
pub fn squared_forcing_system() -> SystemSpec {
    let mut spec = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(1.0, 0.0))]);
    let mut g = VecPoly::zero(1, 2, 1);
    g.set(2, 0, 0, c(1.0, 0.0));
    g.set(0, 1, 0, c(-1.0, 0.0));
    spec.add_term(TermKind::G, MultiIndex::zero(1), g).expect("dimensions match");
    spec.add_term(TermKind::A, MultiIndex::unit(1, 0), VecPoly::constant(&[c(2.0, 0.0)])).expect("dimensions match");
    spec
}

/// Directions (π/4, 3π/4) with η = 0.1, ρ = 0.5.
pub fn upper_direction_range() -> DirectionRange {
    DirectionRange::new(PI / 4.0, 3.0 * PI / 4.0, 0.1, 0.5).expect("valid range")
}

/// ξ/(ξ−1)·χ⁺(ξ), the exact + side solution of the linear example.
pub fn linear_forcing_exact(xi: C64, s: SqrtEps) -> Result<C64> {
    linear_forcing_exact_dir(xi, s, 0.0)
}

/// [`linear_forcing_exact`] with the ray direction that fixes χ⁺ at ε = 0.
pub fn linear_forcing_exact_dir(xi: C64, s: SqrtEps, alpha: f64) -> Result<C64> {
    Ok(xi_chi_dir(xi, Side::Plus, s, alpha)? / (xi - 1.0))
}

fn chi_plus(xi: C64, s: SqrtEps) -> Result<C64> {
    chi_eval(xi, Side::Plus, s, 0.0)
}

const A1_MONOMIALS: [(u32, u32); 5] = [(1, 0), (2, 0), (1, 1), (3, 0), (2, 1)];

fn a1_sqrt_eps() -> [SqrtEps; 3] {
    [
        SqrtEps::new(0.1, 0.0),
        SqrtEps(C64::from_polar(0.1, PI / 3.0)),
        SqrtEps(0.05 * I * C64::from_polar(1.0, -PI / 8.0)),
    ]
}

/// Strip direction and 20 points ξ = κ√ε + e^{iα}v|√ε| with κ ∈ (0, 2), inside
/// the convergence strip of every monomial, and |Im(ξ/√ε)| ≤ 1.2.
pub fn a1_samples(s: SqrtEps) -> (f64, Vec<C64>) {
    let alpha = s.arg() + PI / 2.0;
    let dir = C64::from_polar(1.0, alpha);
    let mut pts = Vec::new();
    for kappa in [0.3, 0.7, 1.1, 1.5, 1.7] {
        for v in [-1.2, -0.4, 0.4, 1.2] {
            pts.push(s.value() * kappa + dir * (v * s.abs()));
        }
    }
    (alpha, pts)
}

fn monomial_quad(a: u32, b: u32, side: Side, alpha: f64, s: SqrtEps, xi: C64) -> Result<C64> {
    // the factors come from t, so no cancellation near ±√ε
    let f = |_x: C64, t: C64| match singular_offsets(t, s) {
        Ok((m, p)) => m.powu(a) * p.powu(b),
        Err(_) => C64::new(0.0, 0.0),
    };
    let (t, n) = default_quad_range(s, alpha, xi, a as f64, b as f64);
    borel_unfolded_quad(f, side, alpha, s, xi, default_time_offset(side, alpha, s, xi), t, n)
}

pub fn a1() -> CriterionReport {
    let title = "closed form vs contour quadrature";
    let run = || -> Result<CriterionReport> {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for s in a1_sqrt_eps() {
            let (alpha, pts) = a1_samples(s);
            for (a, b) in A1_MONOMIALS {
                let closed = borel_monomial(a, b, s, Side::Plus)?;
                for &xi in &pts {
                    let q = monomial_quad(a, b, Side::Plus, alpha, s, xi)?;
                    let exact = closed.eval(xi, alpha)?;
                    worst = worst.max((q - exact).norm() / exact.norm());
                    count += 1;
                }
            }
        }
        Ok(CriterionReport::new("A1", title, worst, A1_TOL, true, format!("max relative error over {count} points")))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A1", title, e))
}

pub fn a2() -> CriterionReport {
    let title = "side relation B⁻ = e^{ξπi/√ε}B⁺";
    let run = || -> Result<CriterionReport> {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for s in a1_sqrt_eps() {
            let (alpha, pts) = a1_samples(s);
            for (a, b) in A1_MONOMIALS {
                for &xi in &pts {
                    let plus = monomial_quad(a, b, Side::Plus, alpha, s, xi)?;
                    let minus = monomial_quad(a, b, Side::Minus, alpha, s, xi)?;
                    let mapped = (xi * PI * I / s.value()).exp() * plus;
                    worst = worst.max((minus - mapped).norm() / minus.norm());
                    count += 1;
                }
            }
        }
        // ε = 0: B⁻_α = −B⁺_{α+π} on the ray of α+π, where both are supported
        let zero = SqrtEps::zero();
        let alpha = PI / 2.0;
        let f = |x: C64, _t: C64| x * x;
        let mut worst0: f64 = 0.0;
        for j in 0..10 {
            let xi = C64::from_polar(0.3 + 0.2 * j as f64, alpha + PI);
            let (t, n) = default_quad_range(zero, alpha, xi, 1.0, 1.0);
            let minus = borel_unfolded_quad(f, Side::Minus, alpha, zero, xi, -1.0, t, n)?;
            let plus = borel_unfolded_quad(f, Side::Plus, alpha + PI, zero, xi, 1.0, t, n)?;
            worst0 = worst0.max((minus + plus).norm() / minus.norm());
        }
        Ok(CriterionReport::new(
            "A2",
            title,
            worst.max(worst0),
            A2_TOL,
            true,
            format!("max relative error {worst:.2e} over {count} points, {worst0:.2e} over 10 ray points at ε = 0"),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A2", title, e))
}

pub fn a3() -> CriterionReport {
    let title = "Borel–Laplace inversion";
    let run = || -> Result<CriterionReport> {
        let s = SqrtEps::new(0.1, 0.0);
        let alpha = PI / 2.0;
        let lambda = 1.0;
        let dr = upper_direction_range();
        let closed = borel_monomial(1, 0, s, Side::Plus)?;
        let line = make_line_function(|xi| vec![closed.eval(xi, alpha).unwrap_or_default()], s.value(), alpha, 8.0, 1025, true)?;
        let mut worst_l: f64 = 0.0;
        let rot = C64::from_polar(1.0, -alpha);
        for r in [3.0, 4.0, 5.0, 6.0] {
            for v in [-6.0, -3.0, 0.0, 3.0, 6.0] {
                let x = inverse_time(rot * C64::new(r, v), s)?;
                if !z_contains(x, s, lambda, &dr)? {
                    return Err(Error::Precondition(format!("sample {} outside Z", x.x)));
                }
                let y = laplace_unfolded(&line, &[], x, s, Side::Plus, lambda)?;
                worst_l = worst_l.max((y[0] - (x.x - s.value())).norm());
            }
        }
        // Gaussian line data e^{−(e^{−iα}ξ)²}: Laplace on the line, then Borel on the time line
        let dir = C64::from_polar(1.0, alpha);
        let gauss = make_line_function(|xi| vec![(-(xi / dir) * (xi / dir)).exp()], c(0.0, 0.0), alpha, 8.0, 1025, false)?;
        let y = |t: C64| laplace_line(&gauss, &[], t).map(|v| v[0]).unwrap_or_default();
        let mut worst_b: f64 = 0.0;
        for k in 0..11 {
            let xi = dir * (-2.0 + 0.4 * k as f64);
            let b = borel_unfolded_quad(|_, t| y(t), Side::Plus, alpha, s, xi, 1.0, 12.0, 48)?;
            worst_b = worst_b.max((b - gauss.eval_u(-2.0 + 0.4 * k as f64)[0]).norm());
        }
        let ok = worst_b < A3_BOREL_TOL;
        Ok(CriterionReport::new(
            "A3",
            title,
            worst_l,
            A3_LAPLACE_TOL,
            ok,
            format!("Laplace of χ vs x−√ε at 20 points; Borel∘Laplace on Gaussian data {worst_b:.2e} (tol {A3_BOREL_TOL:.0e})"),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A3", title, e))
}

/// Euler series Σ_{k≥1}(k−1)!x^k truncated at `terms` coefficients.
pub fn euler_series(terms: usize) -> PowerSeries1 {
    let mut coeffs = vec![c(0.0, 0.0)];
    let mut f = 1.0;
    for k in 1..terms {
        coeffs.push(c(f, 0.0));
        f *= k as f64;
    }
    PowerSeries1::new(coeffs).expect("finite coefficients")
}

fn euler_ray_len(x: f64) -> f64 {
    (80.0 * x.abs()).min(40.0)
}

pub fn a4() -> CriterionReport {
    let title = "Euler series Borel–Padé pipeline";
    let run = || -> Result<CriterionReport> {
        let series = euler_series(20);
        let sum = |x: f64| borel_pade_sum(&series, PI, c(x, 0.0), 4, euler_ray_len(x)).map(|v| v.0);
        let mut worst_res: f64 = 0.0;
        for k in 0..20 {
            let x = -0.2 + (0.19 * k as f64) / 19.0;
            let h = 0.02 * x.abs();
            let d1 = (sum(x + h)? - sum(x - h)?) / (2.0 * h);
            let d2 = (sum(x + h / 2.0)? - sum(x - h / 2.0)?) / h;
            let dy = (4.0 * d2 - d1) / 3.0;
            let r = (x * x * dy - sum(x)? + x).norm();
            worst_res = worst_res.max(r);
        }
        let mut stab_detail = Vec::new();
        let mut worst_spread: f64 = 0.0;
        for n in [4usize, 6, 8] {
            let q: Vec<f64> = (0..=5)
                .map(|j| {
                    let x = -(0.5f64.powi(j)) / 5.0;
                    let rem = borel_pade_remainder(&series, n, PI, c(x, 0.0), 4, euler_ray_len(x))?;
                    Ok(rem.norm() / x.abs().powi(n as i32 + 1))
                })
                .collect::<Result<_>>()?;
            let cn = q.iter().cloned().fold(0.0, f64::max);
            for skip in 0..q.len() {
                let loo = q.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).fold(0.0, f64::max);
                worst_spread = worst_spread.max((loo - cn).abs() / cn);
            }
            stab_detail.push(format!("C_{n} = {cn:.4}"));
        }
        let ok = worst_spread <= A4_STABILITY;
        Ok(CriterionReport::new(
            "A4",
            title,
            worst_res,
            A4_RESIDUAL_TOL,
            ok,
            format!("ODE residual max; {}; leave-one-out spread {worst_spread:.3} (limit {A4_STABILITY})", stab_detail.join(", ")),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A4", title, e))
}

/// Max error over all stored nodes and the fixed-point iteration count for the linear example.
pub fn linear_solver_error(s: SqrtEps, cfg: &SolverConfig) -> Result<(f64, usize)> {
    let spec = linear_forcing_system();
    let grid = build_omega_grid(&spec, s, upper_direction_range(), cfg.lambda, cfg.dirs, cfg.effective_half_width(), cfg.nodes)?;
    let sol = solve_fixed_point(&spec, &grid, cfg.tol, cfg.max_iter)?;
    let mut worst: f64 = 0.0;
    for st in &sol.values {
        for lf in st.lines.values() {
            for j in 0..lf.n {
                worst = worst.max((lf.value(j, 0) - linear_forcing_exact(lf.xi(j), s)?).norm());
            }
        }
    }
    Ok((worst, sol.iterations))
}

pub fn a5() -> CriterionReport {
    let title = "fixed point exactness";
    let run = || -> Result<CriterionReport> {
        let cfg = SolverConfig::default();
        let mut worst: f64 = 0.0;
        let mut iters = 0;
        for s in [SqrtEps::new(0.1, 0.0), SqrtEps(C64::from_polar(0.07, PI / 4.0))] {
            let (e, it) = linear_solver_error(s, &cfg)?;
            worst = worst.max(e);
            iters = iters.max(it);
        }
        // nonlinear variant against the convolution of the exact data
        let s = SqrtEps::new(0.1, 0.0);
        let spec = squared_forcing_system();
        let n = cfg.nodes;
        let t = cfg.effective_half_width();
        let grid = build_omega_grid(&spec, s, upper_direction_range(), cfg.lambda, 1, t, n)?;
        let sol = solve_fixed_point(&spec, &grid, cfg.tol, cfg.max_iter)?;
        let alpha = grid.directions[0];
        let u = StripFunction::from_evaluator(|xi| vec![linear_forcing_exact(xi, s).unwrap_or_default()], alpha, s, t, n, false)?;
        let q = make_line_function(|xi| vec![xi_chi(xi, Side::Plus, s).unwrap_or_default()], c(0.0, 0.0), alpha, t, n, false)?;
        let mut worst_nl: f64 = 0.0;
        for k in OFFSET_LATTICE {
            let oracle = convolve(u.line(k)?, &q)?;
            let got = sol.values[0].line(k)?;
            for j in n / 8..n - n / 8 {
                worst_nl = worst_nl.max((oracle.value(j, 0) - got.value(j, 0)).norm());
            }
        }
        let ok = iters <= 2 && worst_nl < A5_NONLINEAR_TOL;
        Ok(CriterionReport::new(
            "A5",
            title,
            worst,
            A5_LINEAR_TOL,
            ok,
            format!(
                "linear: {iters} iterations; nonlinear vs convolution {worst_nl:.2e} (tol {A5_NONLINEAR_TOL:.0e}) after {} iterations",
                sol.iterations
            ),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A5", title, e))
}

pub fn a6() -> CriterionReport {
    let title = "residue series vs Laplace";
    let run = || -> Result<CriterionReport> {
        let s = SqrtEps::new(0.1, 0.0);
        let spec = linear_forcing_system();
        let r = residue_coefficients(&spec, s, 40)?;
        let mut worst_c: f64 = 0.0;
        for (k, rk) in r.iter().enumerate() {
            let k2 = 2.0 * (k + 1) as f64 * s.value();
            worst_c = worst_c.max((rk[0] - k2 / (k2 + 1.0)).norm());
        }
        let sol = solve_with_retries(&spec, s, upper_direction_range(), &SolverConfig::default())?;
        let cm = CenterManifold::new(&sol)?;
        let mut worst: f64 = 0.0;
        for j in 0..10 {
            let tau = -8.0 + 4.5 * j as f64 / 9.0;
            let cc = 2.0 + 3.0 * j as f64 / 9.0;
            let x = inverse_time(C64::new(tau, -cc), s)?;
            let w = (x.x + s.value()) / (x.x - s.value());
            if w.norm() > 0.5 + 1e-12 {
                return Err(Error::Precondition(format!("|w| = {} exceeds 1/2", w.norm())));
            }
            let lap = cm.eval(x)?;
            let (res, _) = residue_series_eval(&r, x, s)?;
            worst = worst.max((lap[0] - res[0]).norm());
        }
        let ok = worst_c < A6_COEFF_TOL;
        Ok(CriterionReport::new(
            "A6",
            title,
            worst,
            A6_VALUE_TOL,
            ok,
            format!("10 points with |w| ≤ 1/2; coefficient error {worst_c:.2e} (tol {A6_COEFF_TOL:.0e})"),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A6", title, e))
}

/// |√ε| and Λ of the A7 grids; arg √ε = −π/4, directions −π/8 and π/4.
pub const A7_SQRT_EPS_ABS: f64 = 0.15;
pub const A7_LAMBDA: f64 = 3.0;

/// Intersections of the stored lines of two single-direction grids, as
/// (ξ, offset index on grid 1, u₁, offset index on grid 2, u₂).
fn line_intersections(g1: &OmegaGrid, g2: &OmegaGrid, u_max: f64) -> Vec<(C64, i32, f64, i32, f64)> {
    let (d1, d2) = (C64::from_polar(1.0, g1.directions[0]), C64::from_polar(1.0, g2.directions[0]));
    let mut out = Vec::new();
    for k1 in OFFSET_LATTICE {
        for k2 in OFFSET_LATTICE {
            let (c1, c2) = (crate::line_calculus::offset_of(g1.s, k1), crate::line_calculus::offset_of(g2.s, k2));
            // c1 + d1·u1 = c2 + d2·u2
            let rhs = c2 - c1;
            let det = -d1.re * d2.im + d2.re * d1.im;
            let u1 = (-rhs.re * d2.im + d2.re * rhs.im) / det;
            let u2 = (d1.re * rhs.im - d1.im * rhs.re) / det;
            if u1.abs() <= u_max && u2.abs() <= u_max {
                out.push((c1 + d1 * u1, k1, u1, k2, u2));
            }
        }
    }
    out
}

/// The two solutions of the squared-forcing example on single-direction
/// grids on either side of the eigenvalue 1, with their difference at the
/// line intersections in the overlap.
pub fn domain_difference(s_abs: f64, lambda: f64, n: usize) -> Result<Vec<(C64, C64)>> {
    let s = SqrtEps(C64::from_polar(s_abs, -PI / 4.0));
    let spec = squared_forcing_system();
    let dr = DirectionRange::new(-PI / 4.0, PI / 2.0, 0.1, 0.5)?;
    let t = 8.0;
    let g1 = OmegaGrid::with_directions(&spec, s, dr, lambda, vec![-PI / 8.0], t, n, 1e-3)?;
    let g2 = OmegaGrid::with_directions(&spec, s, dr, lambda, vec![PI / 4.0], t, n, 1e-3)?;
    let s1 = solve_fixed_point(&spec, &g1, 1e-12, 300)?;
    let s2 = solve_fixed_point(&spec, &g2, 1e-12, 300)?;
    line_intersections(&g1, &g2, 1.0)
        .into_iter()
        .map(|(xi, k1, u1, k2, u2)| Ok((xi, s1.eval_line(0, k1, u1)?[0] - s2.eval_line(0, k2, u2)?[0])))
        .collect()
}

/// (ξ−1)·χ⁺(1)·χ⁺(ξ−1).
pub fn domain_difference_formula(xi: C64, s: SqrtEps) -> Result<C64> {
    Ok((xi - 1.0) * chi_plus(c(1.0, 0.0), s)? * chi_plus(xi - 1.0, s)?)
}

/// Criteria whose literal statement is contradicted by the computation; each
/// has a companion check (same id with a `c` suffix) that must pass instead.
pub const KNOWN_UNATTAINABLE: &[&str] = &["A7"];

/// Worst mismatch against k·(ξ−1)χ⁺(1)χ⁺(ξ−1), and the largest |difference|.
fn a7_measure(k: C64) -> Result<(f64, f64, usize)> {
    let s = SqrtEps(C64::from_polar(A7_SQRT_EPS_ABS, -PI / 4.0));
    let diffs = domain_difference(A7_SQRT_EPS_ABS, A7_LAMBDA, 2049)?;
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for (xi, d) in &diffs {
        worst = worst.max((d - k * domain_difference_formula(*xi, s)?).norm());
        size = size.max(d.norm());
    }
    Ok((worst, size, diffs.len()))
}

/// The difference formula as stated, without a 2πi factor.
pub fn a7() -> CriterionReport {
    let title = "domain dependence across the eigenvalue";
    let run = || -> Result<CriterionReport> {
        let (worst, size, n) = a7_measure(c(1.0, 0.0))?;
        Ok(CriterionReport::new(
            "A7",
            title,
            worst,
            A7_TOL,
            true,
            format!("{n} overlap points, max |difference| {size:.2e}; known unattainable, see A7c"),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A7", title, e))
}

/// The residue of ũ at ξ = 1 carries 2πi: difference = 2πi·(ξ−1)χ⁺(1)χ⁺(ξ−1).
/// The difference must also be well above the tolerance, so the match is not vacuous.
pub fn a7_corrected() -> CriterionReport {
    let title = "domain dependence with the residue factor 2πi";
    let run = || -> Result<CriterionReport> {
        let (worst, size, n) = a7_measure(2.0 * PI * I)?;
        Ok(CriterionReport::new(
            "A7c",
            title,
            worst,
            A7_TOL,
            size > 5.0 * A7_TOL,
            format!("{n} overlap points, max |difference| {size:.2e}"),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A7c", title, e))
}

/// Compact set near the positive imaginary axis used by A8.
pub fn confluence_points() -> Vec<C64> {
    let mut out = Vec::new();
    for rho in [0.06, 0.1] {
        for d in [-0.4, -0.2, 0.0, 0.2, 0.4] {
            out.push(C64::from_polar(rho, PI / 2.0 + d));
        }
    }
    out
}

pub fn a8() -> CriterionReport {
    let title = "confluence ε → 0";
    let run = || -> Result<CriterionReport> {
        let nus: Vec<f64> = (0..=6).map(|j| 0.5f64.powi(j)).collect();
        let rows = confluence_table(
            &linear_forcing_system(),
            upper_direction_range(),
            c(0.1, 0.0),
            &nus,
            &confluence_points(),
            &SolverConfig::default(),
        )?;
        let mut maxes = Vec::new();
        for nu in &nus {
            let mut m: f64 = 0.0;
            for r in rows.iter().filter(|r| r.nu == *nu) {
                match r.diff {
                    Some(d) => m = m.max(d),
                    None => return Err(Error::OutsideZ),
                }
            }
            maxes.push(m);
        }
        let monotone = maxes.windows(2).all(|w| w[1] < w[0]);
        let last = *maxes.last().unwrap_or(&f64::NAN);
        let list: Vec<String> = maxes.iter().map(|m| format!("{m:.2e}")).collect();
        Ok(CriterionReport::new(
            "A8",
            title,
            last,
            A8_FINAL_TOL,
            monotone,
            format!("max differences for j = 0..6: [{}], monotone = {monotone}", list.join(", ")),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A8", title, e))
}

/// Random line data: a few complex Gaussian bumps on a full line through 0.
pub fn random_line(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> Result<LineFunction> {
    let bumps: Vec<(C64, f64, f64)> = (0..3)
        .map(|_| {
            (
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(-3.0..3.0),
                rng.random_range(0.3..1.5),
            )
        })
        .collect();
    let dir = C64::from_polar(1.0, alpha);
    make_line_function(
        |xi| {
            let u = (xi / dir).re;
            vec![bumps.iter().map(|(a, m, w)| a * (-((u - m) / w).powi(2)).exp()).sum()]
        },
        c(0.0, 0.0),
        alpha,
        8.0,
        n,
        false,
    )
}

pub fn a9() -> CriterionReport {
    a9_with_seed(A9_SEED)
}

/// [`a9`] with another seed for the random line pairs.
pub fn a9_with_seed(seed: u64) -> CriterionReport {
    let title = "Young inequalities and Dirac unit";
    let run = || -> Result<CriterionReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let alpha = rng.random_range(0.0..2.0 * PI);
            let phi = random_line(&mut rng, alpha, 257)?;
            let psi = random_line(&mut rng, alpha, 257)?;
            let back = C64::from_polar(1.0, -alpha);
            let a = back * rng.random_range(-0.8..-0.1);
            let b = back * rng.random_range(0.1..0.8);
            let conv = convolve(&phi, &psi)?;
            let lhs_sup = norm_sup(&conv, a, b)?;
            let rhs_sup = norm_sup(&phi, a, b)? * norm_int(&psi, a, b)?;
            let lhs_int = norm_int(&conv, a, b)?;
            let rhs_int = norm_int(&phi, a, b)? * norm_int(&psi, a, b)?;
            worst = worst.max((lhs_sup - rhs_sup) / rhs_sup).max((lhs_int - rhs_int) / rhs_int);
        }
        let phi = random_line(&mut rng, 0.7, 257)?;
        let unit = convolve_dirac(&DiracAtom::unit(1), &phi)?;
        let exact = unit.values() == phi.values() && unit.base == phi.base && unit.kind == GridKind::Full;
        Ok(CriterionReport::new(
            "A9",
            title,
            worst.max(0.0),
            A9_TOL,
            exact,
            format!("largest relative excess over 50 seeded pairs (seed {seed:#x}); δ₀*φ = φ exactly: {exact}"),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A9", title, e))
}

/// λ = (1, −1) + x·(0.1, −0.1), R = [[0, 0.3], [0.2, 0]].
pub fn two_by_two_system() -> LinearSystemSpec {
    let scalar = |v: f64| VecPoly::constant(&[c(v, 0.0)]);
    LinearSystemSpec {
        n: 2,
        lambda0: vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]],
        lambda1: vec![vec![c(0.1, 0.0)], vec![c(-0.1, 0.0)]],
        r: vec![vec![scalar(0.0), scalar(0.3)], vec![scalar(0.2), scalar(0.0)]],
    }
}

pub fn a10() -> CriterionReport {
    let title = "normalizing transformation";
    let run = || -> Result<CriterionReport> {
        let lin = two_by_two_system();
        let spec = riccati_reduce(&lin)?;
        let s = SqrtEps(C64::from_polar(0.1, PI / 6.0));
        let dr = DirectionRange::new(PI / 3.0, 2.0 * PI / 3.0, 0.1, 0.5)?;
        let sol = solve_with_retries(&spec, s, dr, &SolverConfig::default())?;
        let cm = CenterManifold::new(&sol)?;
        let alpha = PI / 2.0;
        let quad_n = 64;
        let t_eval = |p: SheetPoint| assemble_t(&lin, |t| cm.eval_time(t), s, p, alpha, quad_n);
        let gauge = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 1.0), c(0.5, 0.0)]));
        let rot = C64::from_polar(1.0, -alpha);
        let mut worst: f64 = 0.0;
        let mut worst_gauge: f64 = 0.0;
        for r in [5.0, 7.0, 9.0, 11.0, 13.0] {
            for v in [-2.0, 2.0] {
                let x = inverse_time(rot * C64::new(r, v), s)?;
                if !z_contains(x, s, sol.grid.lambda, &dr)? {
                    return Err(Error::OutsideZ);
                }
                let h = c(1e-4, 0.0);
                worst = worst.max(normalization_residual(&lin, t_eval, x, s, h)?);
                worst_gauge = worst_gauge.max(normalization_residual(&lin, |p| Ok(t_eval(p)? * &gauge), x, s, h)?);
            }
        }
        // T → I along the real-time line into √ε
        let mut worst_id: f64 = 0.0;
        for tau in [150.0, 200.0] {
            let t = assemble_t_at_time(&lin, |t| cm.eval_time(t), s, rot * C64::new(5.0, tau), alpha, quad_n)?;
            worst_id = worst_id.max((t - DMatrix::identity(2, 2)).iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        let ok = worst_id < A10_IDENTITY_TOL && worst_gauge < A10_RESIDUAL_TOL;
        Ok(CriterionReport::new(
            "A10",
            title,
            worst,
            A10_RESIDUAL_TOL,
            ok,
            format!(
                "max residual at 10 points (Λ = {}); gauge-multiplied residual {worst_gauge:.2e}; |T − I| near √ε {worst_id:.2e} (tol {A10_IDENTITY_TOL:.0e})",
                sol.grid.lambda
            ),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A10", title, e))
}

/// Coefficients of the ε = 0 series of the linear example by direct matching:
/// (k−1)c_{k−1} = c_k + [k = 2], c₀ = c₁ = 0, in exact integers.
pub fn eps0_matching_oracle(order: usize) -> Vec<i64> {
    let mut coeffs = vec![0i64; order + 1];
    for k in 2..=order {
        coeffs[k] = (k as i64 - 1) * coeffs[k - 1] - if k == 2 { 1 } else { 0 };
    }
    coeffs
}

pub fn a11() -> CriterionReport {
    let title = "formal layer cross-check";
    let run = || -> Result<CriterionReport> {
        let sol = formal_solution(&linear_forcing_system(), 8)?;
        let oracle = eps0_matching_oracle(10);
        let mut worst: f64 = 0.0;
        for k in 0..=8 {
            worst = worst.max((sol.get(k, 0)[0] - oracle[k + 2] as f64).norm());
        }
        let first = [sol.get(0, 0)[0].re, sol.get(1, 0)[0].re, sol.get(2, 0)[0].re];
        Ok(CriterionReport::new(
            "A11",
            title,
            worst,
            A11_TOL,
            first == [-1.0, -2.0, -6.0],
            format!("y_00, y_10, y_20 = {first:?}; 9 coefficients vs integer matching"),
        ))
    };
    run().unwrap_or_else(|e| CriterionReport::failed("A11", title, e))
}

/// Ids in report order.
pub const CRITERIA: [&str; 12] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A7c", "A8", "A9", "A10", "A11"];

/// True when every failure is a known unattainable criterion whose companion passed.
pub fn suite_ok(reports: &[CriterionReport]) -> bool {
    reports.iter().all(|r| {
        r.passed
            || (KNOWN_UNATTAINABLE.contains(&r.id)
                && reports.iter().any(|q| q.passed && q.id.strip_suffix('c') == Some(r.id)))
    })
}

/// All criteria in order.
pub fn run_all() -> Vec<CriterionReport> {
    vec![a1(), a2(), a3(), a4(), a5(), a6(), a7(), a7_corrected(), a8(), a9(), a10(), a11()]
}

/// A single criterion by id ("A1".."A11", "A7c").
pub fn run_one(id: &str) -> Option<CriterionReport> {
    Some(match id {
        "A1" => a1(),
        "A2" => a2(),
        "A3" => a3(),
        "A4" => a4(),
        "A5" => a5(),
        "A6" => a6(),
        "A7" => a7(),
        "A7c" => a7_corrected(),
        "A8" => a8(),
        "A9" => a9(),
        "A10" => a10(),
        "A11" => a11(),
        _ => return None,
    })
}

/// [`run_one`] with the seed of the randomized criterion replaced.
pub fn run_one_seeded(id: &str, seed: u64) -> Option<CriterionReport> {
    if id == "A9" {
        return Some(a9_with_seed(seed));
    }
    run_one(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_known_values() {
        assert_eq!(&eps0_matching_oracle(5)[2..], &[-1, -2, -6, -24]);
    }

    #[test]
    fn sample_points_stay_near_the_origin_band() {
        for s in a1_sqrt_eps() {
            let (_, pts) = a1_samples(s);
            assert_eq!(pts.len(), 20);
            assert!(pts.iter().all(|p| (p / s.value()).im.abs() <= 1.2 + 1e-12));
        }
    }
}
