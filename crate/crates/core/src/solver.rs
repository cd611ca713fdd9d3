//! Fixed point of the convolution equation in the Borel plane.
//!
//! The + side solution ỹ⁺ is sampled on the five offset lines of every
//! direction strip (on one ray per direction at ε = 0) and obtained by Picard
//! iteration of
//! G[φ](ξ) = (ξI − M(ε))⁻¹·(Σ m_l φ^{*l} + h̃₀ + Σ (a_l x̃ + h̃_l) * φ^{*l}).
//! The − side follows by the factor e^{ξπi/√ε}. Residue data at ξ = −2k√ε come
//! from the local analytic solution at x = −√ε.

use crate::error::{Error, Result};
use crate::geometry::{admissible_alphas, omega_alpha_contains, DirectionRange, SheetPoint, Side, SqrtEps};
use crate::line_calculus::{convolve_strips, convolve_xtilde, offset_of, LineFunction, StripFunction, OFFSET_LATTICE};
use crate::numerics::{eigenvalues, inverse, is_finite, smallest_singular_value, solve, I};
use crate::series_core::{MultiIndex, SystemSpec};
use crate::transforms::{system_rhs_borel, MonomialBorel, RhsBorel};
use crate::C64;
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Tunables of a solve; the defaults are the acceptance settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub dirs: usize,
    /// Line half width T; `None` means max(8, 6/Λ).
    pub half_width: Option<f64>,
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest admissible distance between a grid line and Spec M(ε).
    pub margin_floor: f64,
    pub retries: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 1.0,
            dirs: 3,
            half_width: None,
            nodes: 1025,
            tol: 1e-12,
            max_iter: 60,
            margin_floor: 1e-3,
            retries: 3,
        }
    }
}

impl SolverConfig {
    pub fn effective_half_width(&self) -> f64 {
        self.half_width.unwrap_or_else(|| (6.0 / self.lambda).max(8.0))
    }
}

/// Discretized Ω(√ε): sampled directions, line scaffold and spectral data.
#[derive(Clone, Debug)]
pub struct OmegaGrid {
    pub s: SqrtEps,
    pub dr: DirectionRange,
    pub directions: Vec<f64>,
    pub lambda: f64,
    pub half_width: f64,
    pub n: usize,
    pub m_eps: DMatrix<C64>,
    pub eigenvalues: Vec<C64>,
    /// Smallest distance from a stored line to Spec M(ε) or to ±2√ε·ℕ*.
    pub margin: f64,
}

/// Transverse distance from ξ to the line c + e^{iα}ℝ.
fn line_distance(xi: C64, c: C64, alpha: f64) -> f64 {
    (C64::from_polar(1.0, -alpha) * (xi - c)).im.abs()
}

impl OmegaGrid {
    /// Grid on explicitly chosen directions; each strip is checked against the spectrum.
    #[allow(clippy::too_many_arguments)]
    pub fn with_directions(
        spec: &SystemSpec,
        s: SqrtEps,
        dr: DirectionRange,
        lambda: f64,
        directions: Vec<f64>,
        half_width: f64,
        n: usize,
        margin_floor: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if directions.is_empty() {
            return Err(Error::EmptyAdmissible);
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!("Λ must be positive, got {lambda}")));
        }
        let m_eps = spec.m_at(s.eps());
        let eig = eigenvalues(&m_eps)?;
        let mut margin = f64::INFINITY;
        for &alpha in &directions {
            if !s.is_zero() && 2.0 * lambda >= s.strip_width(alpha) {
                return Err(Error::Precondition(format!(
                    "2Λ = {} exceeds the time strip width {} in direction {alpha}",
                    2.0 * lambda,
                    s.strip_width(alpha)
                )));
            }
            for &ev in &eig {
                let tol = 1e-12 * ev.norm().max(1.0);
                if omega_alpha_contains(ev, alpha, s, tol) {
                    return Err(Error::OmegaIntersectsSpectrum(format!("eigenvalue {ev} in direction {alpha}")));
                }
            }
            let offsets: Vec<C64> =
                if s.is_zero() { vec![C64::new(0.0, 0.0)] } else { OFFSET_LATTICE.iter().map(|&k| offset_of(s, k)).collect() };
            for c in &offsets {
                for &ev in &eig {
                    margin = margin.min(line_distance(ev, *c, alpha));
                }
                if !s.is_zero() {
                    for k in [-2.0, -1.0, 1.0, 2.0] {
                        margin = margin.min(line_distance(2.0 * k * s.value(), *c, alpha));
                    }
                }
            }
        }
        if margin < margin_floor {
            return Err(Error::OmegaIntersectsSpectrum(format!("spectral margin {margin:.3e} below {margin_floor:.1e}")));
        }
        Ok(OmegaGrid { s, dr, directions, lambda, half_width, n, m_eps, eigenvalues: eig, margin })
    }

    /// Strip scaffold of direction `idx` filled by an evaluator.
    pub fn strip_from<F: FnMut(C64) -> Vec<C64>>(&self, idx: usize, f: F, tail_fit: bool) -> Result<StripFunction> {
        StripFunction::from_evaluator(f, self.directions[idx], self.s, self.half_width, self.n, tail_fit)
    }
}

/// d directions spread over the open admissible interval.
pub fn build_omega_grid(
    spec: &SystemSpec,
    s: SqrtEps,
    dr: DirectionRange,
    lambda: f64,
    d: usize,
    half_width: f64,
    n: usize,
) -> Result<OmegaGrid> {
    build_omega_grid_with_floor(spec, s, dr, lambda, d, half_width, n, SolverConfig::default().margin_floor)
}

#[allow(clippy::too_many_arguments)]
pub fn build_omega_grid_with_floor(
    spec: &SystemSpec,
    s: SqrtEps,
    dr: DirectionRange,
    lambda: f64,
    d: usize,
    half_width: f64,
    n: usize,
    margin_floor: f64,
) -> Result<OmegaGrid> {
    if d == 0 {
        return Err(Error::InvalidInput("at least one direction is needed".into()));
    }
    let iv = admissible_alphas(s, &dr)?;
    if iv.is_empty() {
        return Err(Error::EmptyAdmissible);
    }
    OmegaGrid::with_directions(spec, s, dr, lambda, iv.sample(d), half_width, n, margin_floor)
}

/// Converged ỹ⁺ with its iteration diagnostics.
#[derive(Clone, Debug)]
pub struct OmegaSolution {
    pub grid: OmegaGrid,
    pub values: Vec<StripFunction>,
    pub iterations: usize,
    pub contraction_rate: f64,
    pub residual: f64,
}

impl OmegaSolution {
    /// ỹ⁺ at ξ = c_k + e^{iα}u on the stored line of offset index k.
    pub fn eval_line(&self, dir: usize, k: i32, u: f64) -> Result<Vec<C64>> {
        Ok(self.values[dir].line(k)?.eval_u(u))
    }
}

struct DirectionData {
    h: BTreeMap<MultiIndex, StripFunction>,
    resolvent: BTreeMap<i32, Vec<DMatrix<C64>>>,
}

/// The operator G± on a fixed grid with its precomputed right-hand side samples.
pub struct GOperator {
    pub grid: OmegaGrid,
    pub side: Side,
    pub rhs: RhsBorel,
    data: Vec<DirectionData>,
    supports: Vec<MultiIndex>,
}

/// χ·polynomial sample for the strip scaffold; at ε = 0 the ray carries χ⁺ = 1.
fn sample_closed_form(forms: &[MonomialBorel], xi: C64, alpha: f64, s: SqrtEps) -> Result<Vec<C64>> {
    forms
        .iter()
        .map(|f| if s.is_zero() { Ok(f.poly_eval(xi)) } else { f.eval(xi, alpha) })
        .collect()
}

impl GOperator {
    pub fn new(spec: &SystemSpec, grid: &OmegaGrid, side: Side) -> Result<Self> {
        if grid.s.is_zero() && side == Side::Minus {
            return Err(Error::Precondition("at ε = 0 the − side is the + side in direction α+π".into()));
        }
        let rhs = system_rhs_borel(spec, grid.s, side)?;
        let m = spec.dim;
        let mut data = Vec::with_capacity(grid.directions.len());
        for (idx, &alpha) in grid.directions.iter().enumerate() {
            let mut h = BTreeMap::new();
            for (l, forms) in &rhs.h {
                let mut err = None;
                let strip = grid.strip_from(
                    idx,
                    |xi| match sample_closed_form(forms, xi, alpha, grid.s) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            vec![C64::new(0.0, 0.0); m]
                        }
                    },
                    true,
                )?;
                if let Some(e) = err {
                    return Err(e);
                }
                h.insert(l.clone(), strip);
            }
            let scaffold = grid.strip_from(idx, |_| vec![C64::new(0.0, 0.0)], false)?;
            let mut resolvent = BTreeMap::new();
            for (&k, lf) in &scaffold.lines {
                let mut mats = Vec::with_capacity(lf.n);
                for j in 0..lf.n {
                    let a = DMatrix::from_diagonal_element(m, m, lf.xi(j)) - &grid.m_eps;
                    mats.push(inverse(&a)?);
                }
                resolvent.insert(k, mats);
            }
            data.push(DirectionData { h, resolvent });
        }
        let mut supports: Vec<MultiIndex> = spec
            .m_terms
            .keys()
            .chain(spec.a_terms.keys())
            .chain(rhs.h.keys())
            .filter(|l| l.order() >= 1)
            .cloned()
            .collect();
        supports.sort_by_key(|l| (l.order(), l.clone()));
        supports.dedup();
        Ok(GOperator { grid: grid.clone(), side, rhs, data, supports })
    }

    /// Convolution powers φ^{*l} for every l in the supports, memoized by |l|.
    fn powers(&self, phi: &StripFunction) -> Result<BTreeMap<MultiIndex, StripFunction>> {
        let m = self.rhs.dim;
        let comps: Vec<StripFunction> = (0..m)
            .map(|i| phi.map_lines(|_, lf| lf.map_nodes(1, |_, v| vec![v[i]])))
            .collect::<Result<_>>()?;
        let mut memo: BTreeMap<MultiIndex, StripFunction> = BTreeMap::new();
        fn get(
            l: &MultiIndex,
            comps: &[StripFunction],
            memo: &mut BTreeMap<MultiIndex, StripFunction>,
        ) -> Result<StripFunction> {
            if let Some(p) = memo.get(l) {
                return Ok(p.clone());
            }
            let (rest, i) = l.split_first().expect("powers are taken for |l| ≥ 1");
            let p = if rest.order() == 0 { comps[i].clone() } else { convolve_strips(&get(&rest, comps, memo)?, &comps[i])? };
            memo.insert(l.clone(), p.clone());
            Ok(p)
        }
        for l in &self.supports {
            get(l, &comps, &mut memo)?;
        }
        Ok(memo)
    }

    /// G± on the strip of direction `idx`.
    pub fn apply_direction(&self, idx: usize, phi: &StripFunction) -> Result<StripFunction> {
        let m = self.rhs.dim;
        let dd = &self.data[idx];
        let powers = self.powers(phi)?;
        let mut acc = match dd.h.get(&MultiIndex::zero(m)) {
            Some(h0) => h0.map_lines(|_, lf| lf.map_nodes(m, |_, v| v.to_vec()))?,
            None => phi.zeros_like(m)?,
        };
        let add_scaled = |acc: &StripFunction, coef: &[C64], p: &StripFunction| -> Result<StripFunction> {
            acc.map_lines(|k, lf| {
                let pl = p.line(k)?;
                lf.map_nodes(m, |j, v| {
                    let pv = pl.value(j, 0);
                    v.iter().zip(coef).map(|(a, c)| a + c * pv).collect()
                })
            })
        };
        for (l, coef) in &self.rhs.m {
            if l.order() >= 2 {
                acc = add_scaled(&acc, coef, &powers[l])?;
            }
        }
        for (l, coef) in &self.rhs.a {
            if l.order() >= 1 {
                let xt = convolve_xtilde(&powers[l], self.side)?;
                acc = add_scaled(&acc, coef, &xt)?;
            }
        }
        for (l, h) in &dd.h {
            if l.order() >= 1 {
                let conv = convolve_strips(h, &powers[l])?;
                acc = acc.map_lines(|k, lf| lf.axpy(C64::new(1.0, 0.0), conv.line(k)?))?;
            }
        }
        acc.map_lines(|k, lf| {
            let mats = &dd.resolvent[&k];
            let mut out = lf.map_nodes(m, |j, v| {
                let col = &mats[j] * nalgebra::DVector::from_column_slice(v);
                col.iter().cloned().collect()
            })?;
            out.fit_tails();
            Ok(out)
        })
    }

    pub fn apply(&self, phi: &[StripFunction]) -> Result<Vec<StripFunction>> {
        phi.iter().enumerate().map(|(i, p)| self.apply_direction(i, p)).collect()
    }

    pub fn zero_state(&self) -> Result<Vec<StripFunction>> {
        (0..self.grid.directions.len())
            .map(|i| self.grid.strip_from(i, |_| vec![C64::new(0.0, 0.0); self.rhs.dim], false))
            .collect()
    }
}

/// One application of G± (convenience wrapper).
pub fn apply_g(spec: &SystemSpec, grid: &OmegaGrid, side: Side, phi: &[StripFunction]) -> Result<Vec<StripFunction>> {
    GOperator::new(spec, grid, side)?.apply(phi)
}

/// Weighted sup distance max |a − b|·e^{−Λ|ξ|} over all stored lines.
pub fn weighted_sup_diff(a: &[StripFunction], b: &[StripFunction], lambda: f64) -> f64 {
    let mut d: f64 = 0.0;
    for (sa, sb) in a.iter().zip(b) {
        for (k, la) in &sa.lines {
            if let Some(lb) = sb.lines.get(k) {
                for j in 0..la.n {
                    let w = (-lambda * la.xi(j).norm()).exp();
                    for (x, y) in la.node(j).iter().zip(lb.node(j)) {
                        d = d.max((x - y).norm() * w);
                    }
                }
            }
        }
    }
    d
}

/// Picard iteration φ_{n+1} = G⁺[φ_n] from φ₀ = 0.
pub fn solve_fixed_point(spec: &SystemSpec, grid: &OmegaGrid, tol: f64, max_iter: usize) -> Result<OmegaSolution> {
    let op = GOperator::new(spec, grid, Side::Plus)?;
    let mut phi = op.zero_state()?;
    let mut prev_diff = f64::NAN;
    let mut rate = 0.0;
    let mut bad = 0;
    for it in 1..=max_iter {
        let next = op.apply(&phi)?;
        let diff = weighted_sup_diff(&next, &phi, grid.lambda);
        if !diff.is_finite() {
            return Err(Error::NonFinite(format!("iteration {it}")));
        }
        if prev_diff.is_finite() && prev_diff > 0.0 {
            rate = diff / prev_diff;
            if rate >= 1.0 {
                bad += 1;
                if bad >= 3 {
                    return Err(Error::NotContractive {
                        rate,
                        hint: "increase Λ or shrink ρ".into(),
                    });
                }
            } else {
                bad = 0;
            }
        }
        phi = next;
        if diff < tol {
            let check = op.apply(&phi)?;
            let residual = weighted_sup_diff(&check, &phi, grid.lambda);
            return Ok(OmegaSolution { grid: grid.clone(), values: phi, iterations: it, contraction_rate: rate, residual });
        }
        prev_diff = diff;
    }
    Err(Error::NoConvergence { iterations: max_iter, last_diff: prev_diff })
}

/// Builds the grid and solves; on a contraction failure raises Λ by half and
/// shrinks ρ by a quarter, at most `cfg.retries` times.
pub fn solve_with_retries(spec: &SystemSpec, s: SqrtEps, dr: DirectionRange, cfg: &SolverConfig) -> Result<OmegaSolution> {
    let mut lambda = cfg.lambda;
    let mut dr = dr;
    let mut attempt = 0;
    loop {
        let t = cfg.half_width.unwrap_or_else(|| (6.0 / lambda).max(8.0));
        let grid = build_omega_grid_with_floor(spec, s, dr, lambda, cfg.dirs, t, cfg.nodes, cfg.margin_floor)?;
        match solve_fixed_point(spec, &grid, cfg.tol, cfg.max_iter) {
            Err(e @ Error::NotContractive { .. }) => {
                let next = DirectionRange { rho: dr.rho * 0.75, ..dr };
                if attempt >= cfg.retries || !next.contains_sqrt_eps(s) {
                    return Err(e);
                }
                attempt += 1;
                lambda *= 1.5;
                dr = next;
            }
            other => return other,
        }
    }
}

/// ỹ⁻ = e^{ξπi/√ε}·ỹ⁺ on every stored line.
pub fn conjugate_minus(sol: &OmegaSolution) -> Result<Vec<StripFunction>> {
    conjugate_values(&sol.values, sol.grid.s)
}

/// Multiplies strip data by e^{ξπi/√ε} nodewise.
pub fn conjugate_values(values: &[StripFunction], s: SqrtEps) -> Result<Vec<StripFunction>> {
    if s.is_zero() {
        return Err(Error::Precondition("the − side factor needs ε ≠ 0".into()));
    }
    let p = PI * I / s.value();
    values
        .iter()
        .map(|st| {
            st.map_lines(|_, lf| {
                let mut out = lf.map_nodes(lf.dim, |j, v| {
                    let f = (lf.xi(j) * p).exp();
                    v.iter().map(|x| if x.norm() == 0.0 { *x } else { x * f }).collect()
                })?;
                out.fit_tails();
                Ok(out)
            })
        })
        .collect()
}

/// Truncated power series in w with vector or scalar coefficients.
type WSeries = Vec<Vec<C64>>;

fn w_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, ai) in a.iter().enumerate() {
        if ai.norm() == 0.0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] += ai * b[j];
        }
    }
    out
}

/// r_1..r_K with y = −2√ε Σ r_k w^k, w = (x+√ε)/(x−√ε), from the local
/// analytic solution at x = −√ε.
pub fn residue_coefficients(spec: &SystemSpec, s: SqrtEps, k_max: usize) -> Result<Vec<Vec<C64>>> {
    residue_coefficients_with_margin(spec, s, k_max, 1e-8)
}

pub fn residue_coefficients_with_margin(spec: &SystemSpec, s: SqrtEps, k_max: usize, margin: f64) -> Result<Vec<Vec<C64>>> {
    if s.is_zero() {
        return Err(Error::Precondition("residue data need ε ≠ 0".into()));
    }
    let m0 = spec.m_at(C64::new(0.0, 0.0));
    let ev0 = eigenvalues(&m0)?;
    // Poincaré type: all eigenvalues of M(0) in an open half plane
    let poincare = (0..720).any(|j| {
        let d = C64::from_polar(1.0, j as f64 * PI / 360.0);
        ev0.iter().all(|e| (e * d.conj()).re > 1e-12)
    });
    if !poincare {
        return Err(Error::Precondition("Spec M(0) is not of Poincaré type".into()));
    }
    let sv = s.value();
    let eps = s.eps();
    let m = spec.dim;
    let n = k_max + 1;
    let zero = C64::new(0.0, 0.0);
    // x = −√ε(1+w)/(1−w), x²−ε = 4εw/(1−w)²
    let mut xs = vec![zero; n];
    xs[0] = -sv;
    for c in xs.iter_mut().skip(1) {
        *c = -2.0 * sv;
    }
    let qs: Vec<C64> = (0..n).map(|k| 4.0 * eps * k as f64).collect();
    let x_pow = |p: usize| -> Vec<C64> {
        let mut out = vec![zero; n];
        out[0] = C64::new(1.0, 0.0);
        for _ in 0..p {
            out = w_mul(&out, &xs);
        }
        out
    };
    let poly_series = |poly: &crate::series_core::VecPoly| -> Vec<Vec<C64>> {
        // per component, Σ_p c_p(ε) x(w)^p
        let at = poly.at_eps(eps);
        let mut comps = vec![vec![zero; n]; m];
        for (p, row) in at.iter().enumerate() {
            let xp = x_pow(p);
            for (i, c) in row.iter().enumerate() {
                if c.norm() == 0.0 {
                    continue;
                }
                for (dst, v) in comps[i].iter_mut().zip(&xp) {
                    *dst += c * v;
                }
            }
        }
        comps
    };
    let m_series: Vec<(MultiIndex, Vec<Vec<C64>>)> =
        spec.m_terms.iter().filter(|(l, _)| l.order() >= 2).map(|(l, p)| (l.clone(), poly_series(p))).collect();
    let a_series: Vec<(MultiIndex, Vec<Vec<C64>>)> = spec
        .a_terms
        .iter()
        .map(|(l, p)| {
            let comps = poly_series(p);
            (l.clone(), comps.into_iter().map(|c| w_mul(&c, &xs)).collect())
        })
        .collect();
    let g_series: Vec<(MultiIndex, Vec<Vec<C64>>)> = spec
        .g_terms
        .iter()
        .map(|(l, p)| {
            let comps = poly_series(p);
            (l.clone(), comps.into_iter().map(|c| w_mul(&c, &qs)).collect())
        })
        .collect();
    let a1 = spec.a_linear_at(eps);
    let m_eps = spec.m_at(eps);
    // y[i][k]
    let mut y: WSeries = vec![vec![zero; n]; m];
    let y_pow = |y: &WSeries, l: &MultiIndex| -> Vec<C64> {
        let mut out = vec![zero; n];
        out[0] = C64::new(1.0, 0.0);
        for (i, &e) in l.0.iter().enumerate() {
            for _ in 0..e {
                out = w_mul(&out, &y[i]);
            }
        }
        out
    };
    let mut r = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        // [f]_k with Y_k = 0, excluding the −√ε·A₁·Y_k part of the linear x-term
        let mut fk = vec![zero; m];
        for (l, comps) in m_series.iter().chain(a_series.iter()).chain(g_series.iter()) {
            let yl = y_pow(&y, l);
            for (i, c) in comps.iter().enumerate() {
                let prod = w_mul(c, &yl);
                fk[i] += prod[k];
            }
        }
        let mut a = m_eps.clone() - a1.clone() * sv;
        for i in 0..m {
            a[(i, i)] += 2.0 * sv * k as f64;
        }
        if smallest_singular_value(&a) < margin * (1.0 + a.norm()) {
            return Err(Error::ResonantEps(format!("2k√ε with k = {k} meets Spec(M − √εA₁)")));
        }
        let rhs: Vec<C64> = fk.iter().map(|v| -v).collect();
        let yk = solve(&a, &rhs)?;
        for i in 0..m {
            y[i][k] = yk[i];
        }
        r.push(yk.iter().map(|v| -v / (2.0 * sv)).collect());
    }
    Ok(r)
}

/// −2√ε Σ r_k w^k at x with the geometric remainder bound.
pub fn residue_series_eval(r: &[Vec<C64>], x: SheetPoint, s: SqrtEps) -> Result<(Vec<C64>, f64)> {
    if s.is_zero() {
        return Err(Error::Precondition("residue data need ε ≠ 0".into()));
    }
    let sv = s.value();
    if (x.x - sv).norm() == 0.0 {
        return Err(Error::OutsideZ);
    }
    let w = (x.x + sv) / (x.x - sv);
    let m = r.first().map(|v| v.len()).unwrap_or(0);
    if m == 0 {
        return Ok((vec![], 0.0));
    }
    // radius from the decay of the last half of the coefficients
    let norm = |v: &[C64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let k = r.len();
    let half = k / 2;
    let mut growth: f64 = 0.0;
    for j in half.max(1)..k {
        let a = norm(&r[j - 1]);
        let b = norm(&r[j]);
        if a > 0.0 {
            growth = growth.max(b / a);
        }
    }
    let ratio = w.norm() * growth.max(1e-300);
    if ratio >= 1.0 {
        return Err(Error::Precondition(format!("|w| = {} beyond the residue series radius", w.norm())));
    }
    let mut acc = vec![C64::new(0.0, 0.0); m];
    let mut wk = C64::new(1.0, 0.0);
    for rk in r {
        wk *= w;
        for (a, c) in acc.iter_mut().zip(rk) {
            *a += c * wk;
        }
    }
    let last = norm(&r[k - 1]) * w.norm().powi(k as i32);
    let bound = 2.0 * sv.norm() * last * ratio / (1.0 - ratio);
    let out: Vec<C64> = acc.into_iter().map(|a| -2.0 * sv * a).collect();
    if out.iter().any(|v| !is_finite(*v)) {
        return Err(Error::NonFinite("residue series".into()));
    }
    Ok((out, bound))
}

/// Central line of a direction, for Laplace integrals.
pub fn central_line(values: &[StripFunction], dir: usize) -> &LineFunction {
    values[dir].central()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line_calculus::{convolve, make_line_function};
    use crate::numerics::c;
    use crate::series_core::{TermKind, VecPoly};
    use crate::transforms::xi_chi;

    pub(crate) fn example_u() -> SystemSpec {
        let mut spec = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(1.0, 0.0))]);
        spec.add_term(TermKind::G, MultiIndex::zero(1), VecPoly::constant(&[c(1.0, 0.0)])).unwrap();
        spec
    }

    pub(crate) fn example_y() -> SystemSpec {
        let mut spec = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(1.0, 0.0))]);
        let mut g = VecPoly::zero(1, 2, 1);
        g.set(2, 0, 0, c(1.0, 0.0));
        g.set(0, 1, 0, c(-1.0, 0.0));
        spec.add_term(TermKind::G, MultiIndex::zero(1), g).unwrap();
        spec.add_term(TermKind::A, MultiIndex::unit(1, 0), VecPoly::constant(&[c(2.0, 0.0)])).unwrap();
        spec
    }

    fn dr() -> DirectionRange {
        DirectionRange::new(PI / 4.0, 3.0 * PI / 4.0, 0.1, 0.5).unwrap()
    }

    #[test]
    fn grid_examples() {
        let s = SqrtEps::new(0.1, 0.0);
        let g = build_omega_grid(&example_u(), s, dr(), 1.0, 3, 8.0, 65).unwrap();
        assert_eq!(g.directions.len(), 3);
        assert!(g.margin > 0.05);
        let mut bad = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(0.0, 1.0))]);
        bad.add_term(TermKind::G, MultiIndex::zero(1), VecPoly::constant(&[c(1.0, 0.0)])).unwrap();
        assert!(matches!(build_omega_grid(&bad, s, dr(), 1.0, 3, 8.0, 65), Err(Error::OmegaIntersectsSpectrum(_))));
        let g0 = build_omega_grid(&example_u(), SqrtEps::zero(), dr(), 1.0, 2, 8.0, 65).unwrap();
        let z = g0.strip_from(0, |_| vec![c(0.0, 0.0)], false).unwrap();
        assert_eq!(z.lines.len(), 1);
    }

    #[test]
    fn g_examples() {
        let s = SqrtEps(C64::from_polar(0.1, 0.2));
        let spec = example_u();
        let grid = build_omega_grid(&spec, s, dr(), 1.0, 2, 6.0, 129).unwrap();
        let op = GOperator::new(&spec, &grid, Side::Plus).unwrap();
        let z = op.zero_state().unwrap();
        let g0 = op.apply(&z).unwrap();
        let g1 = op.apply(&g0).unwrap();
        for (idx, st) in g1.iter().enumerate() {
            for (k, lf) in &st.lines {
                for j in 0..lf.n {
                    let xi = lf.xi(j);
                    let exact = xi_chi(xi, Side::Plus, s).unwrap() / (xi - 1.0);
                    assert!((lf.value(j, 0) - exact).norm() < 1e-13, "{idx} {k} {j}");
                }
            }
        }
        let empty = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(1.0, 0.0))]);
        let op = GOperator::new(&empty, &grid, Side::Plus).unwrap();
        let z = op.zero_state().unwrap();
        assert_eq!(weighted_sup_diff(&op.apply(&z).unwrap(), &z, 0.0), 0.0);
    }

    #[test]
    fn linear_example_converges_at_once() {
        let s = SqrtEps(C64::from_polar(0.07, PI / 4.0));
        let spec = example_u();
        let grid = build_omega_grid(&spec, s, dr(), 1.0, 2, 8.0, 257).unwrap();
        let sol = solve_fixed_point(&spec, &grid, 1e-12, 10).unwrap();
        assert!(sol.iterations <= 2);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn nonlinear_example_matches_convolution() {
        let s = SqrtEps::new(0.1, 0.0);
        let spec = example_y();
        let grid = build_omega_grid(&spec, s, dr(), 1.0, 1, 8.0, 513).unwrap();
        let sol = solve_fixed_point(&spec, &grid, 1e-12, 60).unwrap();
        assert!(sol.contraction_rate < 1.0);
        let alpha = grid.directions[0];
        let u = StripFunction::from_evaluator(
            |xi| vec![xi_chi(xi, Side::Plus, s).unwrap() / (xi - 1.0)],
            alpha,
            s,
            8.0,
            513,
            false,
        )
        .unwrap();
        let q = make_line_function(|xi| vec![xi_chi(xi, Side::Plus, s).unwrap()], c(0.0, 0.0), alpha, 8.0, 513, false).unwrap();
        for k in OFFSET_LATTICE {
            let oracle = convolve(u.line(k).unwrap(), &q).unwrap();
            let got = sol.values[0].line(k).unwrap();
            for j in 64..449 {
                assert!((oracle.value(j, 0) - got.value(j, 0)).norm() < 1e-6, "{k} {j}");
            }
        }
    }

    #[test]
    fn minus_side_is_fixed_point_of_g_minus() {
        let s = SqrtEps::new(0.1, 0.0);
        let spec = example_y();
        let grid = build_omega_grid(&spec, s, dr(), 1.0, 1, 8.0, 257).unwrap();
        let sol = solve_fixed_point(&spec, &grid, 1e-12, 60).unwrap();
        let minus = conjugate_minus(&sol).unwrap();
        let op = GOperator::new(&spec, &grid, Side::Minus).unwrap();
        let next = op.apply(&minus).unwrap();
        // compare away from the truncated ends
        for k in OFFSET_LATTICE {
            let (a, b) = (next[0].line(k).unwrap(), minus[0].line(k).unwrap());
            for j in 32..225 {
                let scale = b.value(j, 0).norm().max(1e-3);
                assert!((a.value(j, 0) - b.value(j, 0)).norm() < 1e-8 * scale.max(1.0), "{k} {j}");
            }
        }
        let twice = conjugate_values(&minus, s).unwrap();
        let lf = twice[0].central();
        let base = sol.values[0].central();
        for j in [100, 128, 150] {
            let f = (2.0 * lf.xi(j) * PI * I / s.value()).exp();
            assert!((lf.value(j, 0) - f * base.value(j, 0)).norm() < 1e-10 * lf.value(j, 0).norm().max(1e-300));
        }
    }

    #[test]
    fn residue_examples() {
        let s = SqrtEps::new(0.1, 0.0);
        let r = residue_coefficients(&example_u(), s, 40).unwrap();
        for (k, rk) in r.iter().enumerate() {
            let k = (k + 1) as f64;
            let exact = 2.0 * k * 0.1 / (2.0 * k * 0.1 + 1.0);
            assert!((rk[0] - exact).norm() < 1e-12);
        }
        let (v, _) = residue_series_eval(&r, SheetPoint::new(c(-0.1, 0.0)), s).unwrap();
        assert_eq!(v[0], c(0.0, 0.0));
        // resonance: M = −2√ε·3
        let mut res = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(-0.6, 0.0))]);
        res.add_term(TermKind::G, MultiIndex::zero(1), VecPoly::constant(&[c(1.0, 0.0)])).unwrap();
        assert!(matches!(residue_coefficients(&res, s, 5), Err(Error::ResonantEps(_))));
    }

    #[test]
    fn residue_series_solves_the_equation() {
        // (x²−ε)u′ = u + (x²−ε) at points near −√ε, derivative by central differences
        let s = SqrtEps(C64::from_polar(0.1, 0.3));
        let r = residue_coefficients(&example_u(), s, 60).unwrap();
        let u = |x: C64| residue_series_eval(&r, SheetPoint::new(x), s).unwrap().0[0];
        for x in [c(-0.12, 0.01), c(-0.09, -0.02), c(-0.1, 0.03)] {
            let x = x * C64::from_polar(1.0, 0.3);
            let h = 1e-4;
            let du = (u(x + h) - u(x - h)) / (2.0 * h);
            let q = x * x - s.eps();
            let res = (q * du - u(x) - q).norm();
            assert!(res < 1e-7, "{x}: {res}");
        }
    }
}
