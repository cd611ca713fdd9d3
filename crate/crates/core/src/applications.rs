//! End-to-end uses of the Borel-plane solution: the center manifold y(x, √ε),
//! ODE residuals, the ε → 0 confluence table, classical Borel–Padé sums at
//! ε = 0, and the diagonalizing normalization of linear systems through the
//! Riccati reduction.

use crate::error::{Error, Result};
use crate::geometry::{inverse_time, singular_offsets, time_coord_lenient, z_contains, DirectionRange, SheetPoint, Side, SqrtEps};
use crate::line_calculus::LineFunction;
use crate::numerics::{is_finite, smallest_singular_value, solve, GaussRule, I};
use crate::series_core::{formal_borel, MultiIndex, PowerSeries1, SystemSpec, TermKind, VecPoly};
use crate::solver::{conjugate_values, solve_with_retries, OmegaSolution, SolverConfig};
use crate::transforms::{laplace_line, laplace_ray};
use crate::C64;
use nalgebra::DMatrix;

/// Strip margin below which a point counts as outside Z.
const SELECT_MARGIN: f64 = 1e-9;

/// Laplace-side view of a solution: central lines of ỹ⁺ and ỹ⁻ per direction.
pub struct CenterManifold<'a> {
    pub sol: &'a OmegaSolution,
    plus: Vec<LineFunction>,
    minus: Option<Vec<LineFunction>>,
}

/// Selected direction index, side and margin of t(x, ε) inside its strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripChoice {
    pub dir: usize,
    pub side: Side,
    pub margin: f64,
    pub t: C64,
}

impl<'a> CenterManifold<'a> {
    pub fn new(sol: &'a OmegaSolution) -> Result<Self> {
        let plus: Vec<LineFunction> = sol.values.iter().map(|st| st.central().clone()).collect();
        let minus = if sol.grid.s.is_zero() {
            None
        } else {
            // overflows for tiny √ε; the + side alone then serves
            conjugate_values(&sol.values, sol.grid.s)
                .ok()
                .map(|v| v.into_iter().map(|st| st.central().clone()).collect())
        };
        Ok(CenterManifold { sol, plus, minus })
    }

    /// Direction and side whose strip holds t(x, ε) with the widest margin;
    /// ties go to the direction nearest the middle of the sampled range.
    pub fn choose(&self, x: SheetPoint) -> Result<StripChoice> {
        match time_coord_lenient(x, self.sol.grid.s) {
            Ok(t) => self.choose_time(t),
            Err(_) => Err(Error::OutsideZ),
        }
    }

    /// [`CenterManifold::choose`] from the time coordinate itself, which stays
    /// accurate where x has merged with ±√ε in floating point.
    pub fn choose_time(&self, t: C64) -> Result<StripChoice> {
        let g = &self.sol.grid;
        let s = g.s;
        let mid = 0.5 * (g.directions[0] + g.directions[g.directions.len() - 1]);
        let mut best: Option<(StripChoice, f64)> = None;
        for (dir, &alpha) in g.directions.iter().enumerate() {
            let r = (C64::from_polar(1.0, alpha) * t).re;
            let cands: Vec<(Side, f64)> = if s.is_zero() {
                vec![(Side::Plus, r - g.lambda)]
            } else if self.minus.is_none() {
                vec![(Side::Plus, (r - g.lambda).min(s.strip_width(alpha) - g.lambda - r))]
            } else {
                let w = s.strip_width(alpha);
                vec![
                    (Side::Plus, (r - g.lambda).min(w - g.lambda - r)),
                    (Side::Minus, (-r - g.lambda).min(w - g.lambda + r)),
                ]
            };
            for (side, margin) in cands {
                let tie = (alpha - mid).abs();
                let better = match &best {
                    None => true,
                    Some((b, bt)) => margin > b.margin + 1e-12 || ((margin - b.margin).abs() <= 1e-12 && tie < *bt),
                };
                if better {
                    best = Some((StripChoice { dir, side, margin, t }, tie));
                }
            }
        }
        match best {
            Some((c, _)) if c.margin > SELECT_MARGIN => Ok(c),
            _ => Err(Error::OutsideZ),
        }
    }

    /// y(x, √ε) by the Laplace integral of the selected line.
    pub fn eval(&self, x: SheetPoint) -> Result<Vec<C64>> {
        let s = self.sol.grid.s;
        if !s.is_zero() && ((x.x - s.value()).norm() == 0.0 || (x.x + s.value()).norm() == 0.0) {
            // the solution vanishes at the singular points
            return Ok(vec![C64::new(0.0, 0.0); self.sol.values[0].dim()]);
        }
        let c = self.choose(x)?;
        self.eval_with(c)
    }

    /// y at the point of time coordinate t.
    pub fn eval_time(&self, t: C64) -> Result<Vec<C64>> {
        let c = self.choose_time(t)?;
        self.eval_with(c)
    }

    pub fn eval_with(&self, c: StripChoice) -> Result<Vec<C64>> {
        let line = match c.side {
            Side::Plus => &self.plus[c.dir],
            Side::Minus => &self.minus.as_ref().ok_or(Error::OutsideZ)?[c.dir],
        };
        laplace_line(line, &[], c.t)
    }
}

/// One-shot [`CenterManifold::eval`].
pub fn center_manifold_eval(spec: &SystemSpec, sol: &OmegaSolution, x: SheetPoint, s: SqrtEps) -> Result<Vec<C64>> {
    if spec.dim != sol.values[0].dim() || s != sol.grid.s {
        return Err(Error::InvalidInput("solution does not belong to this system and √ε".into()));
    }
    CenterManifold::new(sol)?.eval(x)
}

/// Second-order central difference with one Richardson step (h and h/2).
fn richardson_derivative<F: Fn(C64) -> Result<Vec<C64>>>(f: &F, x: C64, h: C64) -> Result<Vec<C64>> {
    let d = |h: C64| -> Result<Vec<C64>> {
        let a = f(x + h)?;
        let b = f(x - h)?;
        Ok(a.iter().zip(&b).map(|(p, q)| (p - q) / (2.0 * h)).collect())
    };
    let d1 = d(h)?;
    let d2 = d(h / 2.0)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

/// max_i |(x²−ε)y′ − M y − f| with y′ from a Richardson-extrapolated central difference.
pub fn ode_residual<F: Fn(SheetPoint) -> Result<Vec<C64>>>(
    spec: &SystemSpec,
    y_eval: F,
    x: SheetPoint,
    s: SqrtEps,
    h: f64,
) -> Result<f64> {
    ode_residual_dir(spec, y_eval, x, s, C64::new(h, 0.0))
}

/// [`ode_residual`] with a complex step, e.g. along the local strip direction.
pub fn ode_residual_dir<F: Fn(SheetPoint) -> Result<Vec<C64>>>(
    spec: &SystemSpec,
    y_eval: F,
    x: SheetPoint,
    s: SqrtEps,
    h: C64,
) -> Result<f64> {
    let f = |z: C64| y_eval(SheetPoint { x: z, sheet: x.sheet });
    let dy = richardson_derivative(&f, x.x, h)?;
    let y = f(x.x)?;
    let eps = s.eps();
    let rhs = spec.eval_rhs(x.x, &y, eps);
    let q = x.x * x.x - eps;
    let r = dy.iter().zip(&rhs).map(|(d, r)| (q * d - r).norm()).fold(0.0, f64::max);
    if !r.is_finite() {
        return Err(Error::NonFinite("ODE residual".into()));
    }
    Ok(r)
}

/// Padé [L/M] of a power series from its first L+M+1 coefficients: (p, q), q₀ = 1.
/// The denominator degree drops until the Toeplitz system is regular.
pub fn pade(coeffs: &[C64], m_max: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let zero = C64::new(0.0, 0.0);
    let b = |k: isize| if k < 0 || k as usize >= n { zero } else { coeffs[k as usize] };
    for m in (0..=m_max.min(n - 1)).rev() {
        let l = n - 1 - m;
        let mut q = vec![C64::new(1.0, 0.0)];
        if m > 0 {
            let mut a = DMatrix::zeros(m, m);
            let mut rhs = vec![zero; m];
            for r in 0..m {
                let k = (l + 1 + r) as isize;
                for j in 1..=m {
                    a[(r, j - 1)] = b(k - j as isize);
                }
                rhs[r] = -b(k);
            }
            let scale = a.iter().map(|v: &C64| v.norm()).fold(0.0, f64::max).max(1e-300);
            if smallest_singular_value(&a) < 1e-11 * scale {
                continue;
            }
            q.extend(solve(&a, &rhs)?);
        }
        let p: Vec<C64> = (0..=l)
            .map(|k| (0..=m.min(k)).map(|j| q[j] * b(k as isize - j as isize)).sum())
            .collect();
        return Ok((p, q));
    }
    Err(Error::InvalidInput("no regular Padé table entry".into()))
}

fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, v| acc * z + v)
}

/// Classical Borel sum at ε = 0 in direction α: formal Borel transform,
/// Padé continuation along the ray, Laplace integral. Returns (value, tail bound).
pub fn borel_pade_sum(series: &PowerSeries1, alpha: f64, x: C64, m_max: usize, ray_len: f64) -> Result<(C64, f64)> {
    let phi = formal_borel(series)?;
    let (p, q) = pade(phi.coeffs(), m_max)?;
    let dir = C64::from_polar(1.0, alpha);
    let qscale: f64 = q.iter().map(|c| c.norm()).sum();
    for k in 0..=2000 {
        let z = dir * (ray_len * k as f64 / 2000.0);
        if horner(&q, z).norm() < 1e-8 * qscale.max(1.0) * (1.0 + z.norm()).powi(q.len() as i32 - 1) {
            return Err(Error::Precondition(format!("Padé pole near the ray at {z}")));
        }
    }
    laplace_ray(|z| horner(&p, z) / horner(&q, z), alpha, x, ray_len)
}

/// y − Σ_{k≤N} y_k x^k for the Borel–Padé sum, computed as the Laplace
/// integral of ξ^N·(p − q·φ_{<N})/(ξ^N q) so the leading cancellation is exact.
pub fn borel_pade_remainder(series: &PowerSeries1, n: usize, alpha: f64, x: C64, m_max: usize, ray_len: f64) -> Result<C64> {
    let phi = formal_borel(series)?;
    if n > phi.coeffs().len() {
        return Err(Error::InvalidInput(format!("remainder order {n} exceeds the series length")));
    }
    let (p, q) = pade(phi.coeffs(), m_max)?;
    let head = &phi.coeffs()[..n];
    let len = p.len().max(q.len() + n);
    let mut num = vec![C64::new(0.0, 0.0); len];
    for (k, v) in p.iter().enumerate() {
        num[k] += v;
    }
    for (i, qi) in q.iter().enumerate() {
        for (j, hj) in head.iter().enumerate() {
            num[i + j] -= qi * hj;
        }
    }
    let shifted = &num[n..];
    laplace_ray(|z| z.powu(n as u32) * horner(shifted, z) / horner(&q, z), alpha, x, ray_len).map(|v| v.0)
}

/// A row of the confluence table; `diff` is `None` for skipped points.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfluenceRow {
    pub nu: f64,
    pub x: C64,
    pub diff: Option<f64>,
}

/// Node count that resolves the χ transition of width ~|√ε|·sinθ on lines of half width T.
pub fn confluence_nodes(base: usize, s: SqrtEps, alpha: f64, half_width: f64) -> usize {
    if s.is_zero() {
        return base;
    }
    let sin = (alpha - s.arg()).sin().abs().max(1e-3);
    let h = 0.34 * 2.0 * s.abs() * sin;
    let n = ((2.0 * half_width / h).ceil() as usize + 1).max(base).min(40001);
    n | 1
}

/// |y(x, ν·s₀) − y(x, 0)| over the grid of ν and x; ε = 0 comes from the ray solution.
pub fn confluence_table(
    spec: &SystemSpec,
    dr: DirectionRange,
    s0: C64,
    nu_list: &[f64],
    x_list: &[C64],
    cfg: &SolverConfig,
) -> Result<Vec<ConfluenceRow>> {
    let zero_sol = solve_with_retries(spec, SqrtEps::zero(), dr, cfg)?;
    let zero_cm = CenterManifold::new(&zero_sol)?;
    let y0: Vec<Option<Vec<C64>>> = x_list.iter().map(|x| zero_cm.eval(SheetPoint::new(*x)).ok()).collect();
    let mut rows = Vec::new();
    for &nu in nu_list {
        if nu == 0.0 {
            for (x, y) in x_list.iter().zip(&y0) {
                rows.push(ConfluenceRow { nu, x: *x, diff: y.as_ref().map(|_| 0.0) });
            }
            continue;
        }
        let s = SqrtEps(s0 * nu);
        let mut c = cfg.clone();
        let mid = crate::geometry::admissible_alphas(s, &dr)?.midpoint();
        c.nodes = confluence_nodes(cfg.nodes, s, mid, cfg.effective_half_width());
        let sol = solve_with_retries(spec, s, dr, &c)?;
        let cm = CenterManifold::new(&sol)?;
        for (x, y) in x_list.iter().zip(&y0) {
            let p = SheetPoint::new(*x);
            let inside = z_contains(p, s, sol.grid.lambda, &dr).unwrap_or(false);
            let diff = match (y, inside) {
                (Some(y0v), true) => match cm.eval(p) {
                    Ok(v) => Some(v.iter().zip(y0v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)),
                    Err(_) => None,
                },
                _ => None,
            };
            rows.push(ConfluenceRow { nu, x: *x, diff });
        }
    }
    Ok(rows)
}

/// Polynomial in (x, ε) with scalar coefficients, stored as a one-component [`VecPoly`].
pub type ScalarPoly = VecPoly;

/// (x²−ε)T′ = (Λ + (x²−ε)R)T − TΛ with Λ = Diag(λ⁰_i(ε) + x·λ¹_i(ε)).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystemSpec {
    pub n: usize,
    /// λ⁰_i(ε) as ascending ε-coefficients.
    pub lambda0: Vec<Vec<C64>>,
    pub lambda1: Vec<Vec<C64>>,
    /// R_ij(x, ε), row-major.
    pub r: Vec<Vec<ScalarPoly>>,
}

fn eps_poly(c: &[C64], eps: C64) -> C64 {
    horner(c, eps)
}

impl LinearSystemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.lambda0.len() != self.n || self.lambda1.len() != self.n || self.r.len() != self.n {
            return Err(Error::InvalidInput("linear system needs n ≥ 2 and n entries per field".into()));
        }
        if self.r.iter().any(|row| row.len() != self.n || row.iter().any(|p| p.dim != 1)) {
            return Err(Error::InvalidInput("R must be n×n scalar polynomials".into()));
        }
        let l0: Vec<C64> = self.lambda0.iter().map(|c| eps_poly(c, C64::new(0.0, 0.0))).collect();
        for i in 0..self.n {
            for j in 0..i {
                if (l0[i] - l0[j]).norm() < 1e-8 {
                    return Err(Error::SingularLeading { sigma: (l0[i] - l0[j]).norm(), floor: 1e-8 });
                }
            }
        }
        Ok(())
    }

    pub fn lambda_at(&self, x: C64, eps: C64) -> Vec<C64> {
        (0..self.n).map(|i| eps_poly(&self.lambda0[i], eps) + x * eps_poly(&self.lambda1[i], eps)).collect()
    }

    pub fn r_at(&self, x: C64, eps: C64) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.r[i][j].eval(x, eps)[0])
    }

    /// Unknown index of u_ij in the reduced system, (i, j) lexicographic with i ≠ j.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j);
        i * (self.n - 1) + if j > i { j - 1 } else { j }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| (0..self.n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
    }
}

fn embed(p: &ScalarPoly, m: usize, comp: usize, scale: C64) -> VecPoly {
    let mut out = VecPoly::zero(m, p.x_deg, p.eps_deg);
    for q in 0..=p.eps_deg {
        for k in 0..=p.x_deg {
            out.set(k, q, comp, p.coeff(k, q, 0) * scale);
        }
    }
    out
}

/// The n(n−1)-dimensional system for the off-diagonal entries u_ij of U:
/// (x²−ε)u′_ij = (λ_i−λ_j)u_ij + (x²−ε)(r_ij + Σ_{k≠j} r_ik u_kj − u_ij r_jj − u_ij Σ_{k≠j} r_jk u_kj).
pub fn riccati_reduce(lin: &LinearSystemSpec) -> Result<SystemSpec> {
    lin.validate()?;
    let n = lin.n;
    let m = n * (n - 1);
    let eps_deg = lin.lambda0.iter().map(|c| c.len()).max().unwrap_or(1).max(1) - 1;
    let mut m_coeffs = vec![DMatrix::zeros(m, m); eps_deg + 1];
    for (i, j) in lin.pairs() {
        let p = lin.pair_index(i, j);
        for (q, mq) in m_coeffs.iter_mut().enumerate() {
            let a = lin.lambda0[i].get(q).cloned().unwrap_or_default();
            let b = lin.lambda0[j].get(q).cloned().unwrap_or_default();
            mq[(p, p)] = a - b;
        }
    }
    let mut spec = SystemSpec::new(m, m_coeffs);
    let one = C64::new(1.0, 0.0);
    for (i, j) in lin.pairs() {
        let p = lin.pair_index(i, j);
        let unit = |a: usize, b: usize| MultiIndex::unit(m, lin.pair_index(a, b));
        // x(λ¹_i − λ¹_j)u_ij
        let len = lin.lambda1[i].len().max(lin.lambda1[j].len()).max(1);
        let mut a = VecPoly::zero(m, 0, len - 1);
        for q in 0..len {
            let v = lin.lambda1[i].get(q).cloned().unwrap_or_default() - lin.lambda1[j].get(q).cloned().unwrap_or_default();
            a.set(0, q, p, v);
        }
        if !a.is_zero() {
            spec.add_term(TermKind::A, unit(i, j), a)?;
        }
        let mut add_g = |l: MultiIndex, poly: &ScalarPoly, scale: C64| -> Result<()> {
            let e = embed(poly, m, p, scale);
            if e.is_zero() {
                return Ok(());
            }
            spec.add_term(TermKind::G, l, e)
        };
        add_g(MultiIndex::zero(m), &lin.r[i][j], one)?;
        for k in (0..n).filter(|&k| k != j) {
            if k != i {
                add_g(unit(k, j), &lin.r[i][k], one)?;
            } else {
                // u_ij·r_ii from the k = i term
                add_g(unit(i, j), &lin.r[i][i], one)?;
            }
        }
        add_g(unit(i, j), &lin.r[j][j], -one)?;
        for k in (0..n).filter(|&k| k != j) {
            let mut l = unit(i, j);
            l.0[lin.pair_index(k, j)] += 1;
            add_g(l, &lin.r[j][k], -one)?;
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Off-diagonal U from the reduced unknowns.
pub fn u_matrix(lin: &LinearSystemSpec, u: &[C64]) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(lin.n, lin.n);
    for (i, j) in lin.pairs() {
        out[(i, j)] = u[lin.pair_index(i, j)];
    }
    out
}

/// x and x²−ε at time t; x²−ε is formed from t so it stays accurate as x → ±√ε.
fn point_at_time(t: C64, s: SqrtEps) -> Result<(C64, C64)> {
    let x = inverse_time(t, s)?.x;
    let (m, p) = singular_offsets(t, s)?;
    Ok((x, m * p))
}

/// T = (I+U)·T_D with T_D = exp(∫_{√ε}^x D), D = diag(R(I+U)); the integral
/// runs along the real-time line t(x) + i·e^{−iα}τ, τ ≥ 0, into √ε, with
/// `quad_n` Gauss panels. `u_eval` takes the time coordinate.
pub fn assemble_t<F: Fn(C64) -> Result<Vec<C64>>>(
    lin: &LinearSystemSpec,
    u_eval: F,
    s: SqrtEps,
    x: SheetPoint,
    alpha: f64,
    quad_n: usize,
) -> Result<DMatrix<C64>> {
    if !s.is_zero() && (x.x - s.value()).norm() == 0.0 {
        return Ok(DMatrix::identity(lin.n, lin.n));
    }
    if s.is_zero() {
        return Err(Error::Precondition("the gauge T_D(√ε) = I needs ε ≠ 0".into()));
    }
    assemble_t_at_time(lin, u_eval, s, time_coord_lenient(x, s)?, alpha, quad_n)
}

/// [`assemble_t`] at the point of time coordinate t0.
pub fn assemble_t_at_time<F: Fn(C64) -> Result<Vec<C64>>>(
    lin: &LinearSystemSpec,
    u_eval: F,
    s: SqrtEps,
    t0: C64,
    alpha: f64,
    quad_n: usize,
) -> Result<DMatrix<C64>> {
    let n = lin.n;
    let eps = s.eps();
    if s.is_zero() {
        return Err(Error::Precondition("the gauge T_D(√ε) = I needs ε ≠ 0".into()));
    }
    let speed = s.abs() * (alpha - s.arg()).sin();
    if speed <= 0.0 {
        return Err(Error::OutsideStrip(format!("direction {alpha} does not lead to √ε")));
    }
    let tau_max = 40.0 / (2.0 * speed);
    let dt = I * C64::from_polar(1.0, -alpha);
    let g = GaussRule::new(8);
    let mut err = None;
    let integral = g.integrate_vec(
        |tau| {
            let t = t0 + dt * tau;
            let step = point_at_time(t, s).and_then(|(x, q)| Ok((x, q, u_eval(t)?)));
            match step {
                Ok((x, q, u)) => {
                    let um = u_matrix(lin, &u) + DMatrix::identity(n, n);
                    let ru = lin.r_at(x, eps) * um;
                    (0..n).map(|i| ru[(i, i)] * q * dt).collect()
                }
                Err(e) => {
                    err.get_or_insert(e);
                    vec![C64::new(0.0, 0.0); n]
                }
            }
        },
        0.0,
        tau_max,
        quad_n.max(1),
        n,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let u = u_eval(t0)?;
    let mut t = u_matrix(lin, &u) + DMatrix::identity(n, n);
    for (j, v) in integral.iter().enumerate() {
        let e = v.exp();
        for i in 0..n {
            t[(i, j)] *= e;
        }
    }
    if t.iter().any(|v| !is_finite(*v)) {
        return Err(Error::NonFinite("normalizing transformation".into()));
    }
    Ok(t)
}

/// ‖(x²−ε)T′ − (Λ + (x²−ε)R)T + TΛ‖ (max modulus) with a Richardson central difference of step h.
pub fn normalization_residual<F: Fn(SheetPoint) -> Result<DMatrix<C64>>>(
    lin: &LinearSystemSpec,
    t_eval: F,
    x: SheetPoint,
    s: SqrtEps,
    h: C64,
) -> Result<f64> {
    let n = lin.n;
    let flat = |z: C64| -> Result<Vec<C64>> {
        let t = t_eval(SheetPoint { x: z, sheet: x.sheet })?;
        Ok(t.iter().cloned().collect())
    };
    let dt = richardson_derivative(&flat, x.x, h)?;
    let dt = DMatrix::from_column_slice(n, n, &dt);
    let t = t_eval(x)?;
    let eps = s.eps();
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lin.lambda_at(x.x, eps)));
    let q = x.x * x.x - eps;
    let a = &lam + lin.r_at(x.x, eps) * q;
    let res = dt * q - a * &t + &t * &lam;
    Ok(res.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;
    use crate::solver::{build_omega_grid, solve_fixed_point};
    use crate::transforms::xi_chi;
    use std::f64::consts::PI;

    fn example_u() -> SystemSpec {
        let mut spec = SystemSpec::new(1, vec![DMatrix::from_element(1, 1, c(1.0, 0.0))]);
        spec.add_term(TermKind::G, MultiIndex::zero(1), VecPoly::constant(&[c(1.0, 0.0)])).unwrap();
        spec
    }

    fn dr() -> DirectionRange {
        DirectionRange::new(PI / 4.0, 3.0 * PI / 4.0, 0.1, 0.5).unwrap()
    }

    fn scalar(v: f64) -> ScalarPoly {
        VecPoly::constant(&[c(v, 0.0)])
    }

    pub(crate) fn desk_case(r12: f64, r21: f64) -> LinearSystemSpec {
        LinearSystemSpec {
            n: 2,
            lambda0: vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]],
            lambda1: vec![vec![c(0.1, 0.0)], vec![c(-0.1, 0.0)]],
            r: vec![vec![scalar(0.0), scalar(r12)], vec![scalar(r21), scalar(0.0)]],
        }
    }

    #[test]
    fn center_manifold_matches_closed_form_laplace() {
        let s = SqrtEps::new(0.1, 0.0);
        let spec = example_u();
        let grid = build_omega_grid(&spec, s, dr(), 1.0, 3, 8.0, 1025).unwrap();
        let sol = solve_fixed_point(&spec, &grid, 1e-12, 10).unwrap();
        let cm = CenterManifold::new(&sol).unwrap();
        for t in [c(-3.0, -4.0), c(2.0, -6.0), c(0.5, 5.0)] {
            let x = inverse_time(t, s).unwrap();
            let y = cm.eval(x).unwrap()[0];
            let res = ode_residual(&spec, |p| cm.eval(p), x, s, 1e-3).unwrap();
            assert!(res < 1e-6, "{t}: residual {res}");
            // direct quadrature of the closed form on the chosen line
            let ch = cm.choose(x).unwrap();
            let alpha = grid.directions[ch.dir];
            let side = ch.side;
            let dir = C64::from_polar(1.0, alpha);
            let direct = GaussRule::new(20).integrate(
                |u| {
                    let xi = dir * u;
                    xi_chi(xi, side, s).unwrap() / (xi - 1.0) * (-ch.t * xi).exp() * dir
                },
                -8.0,
                8.0,
                400,
            );
            assert!((y - direct).norm() < 1e-7, "{t}: {y} vs {direct}");
        }
    }

    #[test]
    fn zero_g_gives_exact_residual() {
        let spec = example_u();
        let s = SqrtEps::new(0.1, 0.0);
        let x = SheetPoint::new(c(0.3, 0.2));
        let r = ode_residual(&spec, |_| Ok(vec![c(0.0, 0.0)]), x, s, 1e-3).unwrap();
        assert!((r - (x.x * x.x - s.eps()).norm()).abs() < 1e-15);
    }

    #[test]
    fn pade_examples() {
        let euler: Vec<C64> = (0..12).map(|_| c(1.0, 0.0)).collect();
        let (p, q) = pade(&euler, 5).unwrap();
        assert_eq!(q.len(), 2);
        assert!((q[1] + 1.0).norm() < 1e-12 && (p[0] - 1.0).norm() < 1e-12);
        // e^{z}: [2/2] = (1 + z/2 + z²/12)/(1 − z/2 + z²/12)
        let e: Vec<C64> = (0..5).map(|k| c(1.0 / crate::numerics::factorial(k), 0.0)).collect();
        let (p, q) = pade(&e, 2).unwrap();
        assert!((p[1] - 0.5).norm() < 1e-12 && (q[1] + 0.5).norm() < 1e-12 && (q[2] - 1.0 / 12.0).norm() < 1e-12);
    }

    #[test]
    fn borel_sum_of_convergent_series() {
        let coeffs: Vec<C64> = (0..30).map(|k| if k == 0 { c(0.0, 0.0) } else { c(0.5f64.powi(k), 0.0) }).collect();
        let series = PowerSeries1::new(coeffs.clone()).unwrap();
        for x in [-0.1, -0.05] {
            let (v, _) = borel_pade_sum(&series, PI, c(x, 0.0), 10, 40.0).unwrap();
            let direct: C64 = coeffs.iter().enumerate().map(|(k, a)| a * x.powi(k as i32)).sum();
            assert!((v - direct).norm() < 1e-9, "{v} vs {direct}");
        }
    }

    #[test]
    fn riccati_desk_case_terms() {
        let lin = desk_case(1.0, 1.0);
        let spec = riccati_reduce(&lin).unwrap();
        assert_eq!(spec.dim, 2);
        let m = spec.m_at(c(0.0, 0.0));
        assert_eq!(m[(0, 0)], c(2.0, 0.0));
        assert_eq!(m[(1, 1)], c(-2.0, 0.0));
        // u12: r12 = 1 at |l| = 0, −r21·u12² ; u21: r21 = 1, −r12·u21²
        assert_eq!(spec.g_terms[&MultiIndex(vec![0, 0])].coeffs, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(spec.g_terms[&MultiIndex(vec![2, 0])].coeffs, vec![c(-1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(spec.g_terms[&MultiIndex(vec![0, 2])].coeffs, vec![c(0.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(spec.g_terms.len(), 3);
        assert_eq!(spec.a_terms[&MultiIndex(vec![1, 0])].coeffs[0], c(0.2, 0.0));
        assert_eq!(spec.a_terms[&MultiIndex(vec![0, 1])].coeffs[1], c(-0.2, 0.0));
        // cross-check f against the displayed right-hand side at a random point
        let x = c(0.3, -0.2);
        let eps = c(0.01, 0.02);
        let u = [c(0.1, 0.05), c(-0.2, 0.1)];
        let f = spec.eval_rhs(x, &u, eps);
        let q = x * x - eps;
        let l = lin.lambda_at(x, eps);
        let e12 = (l[0] - l[1]) * u[0] + q * (1.0 - u[0] * u[0]);
        let e21 = (l[1] - l[0]) * u[1] + q * (1.0 - u[1] * u[1]);
        assert!((f[0] - e12).norm() < 1e-15 && (f[1] - e21).norm() < 1e-15);
        let zero = riccati_reduce(&desk_case(0.0, 0.0)).unwrap();
        assert!(zero.g_terms.is_empty() && zero.m_terms.is_empty());
        let mut bad = desk_case(0.0, 0.0);
        bad.lambda0[1] = vec![c(1.0, 0.0)];
        assert!(riccati_reduce(&bad).is_err());
    }

    #[test]
    fn riccati_three_dimensional_rhs() {
        // displayed right-hand side against a direct matrix evaluation for n = 3
        let mut r = vec![vec![scalar(0.0); 3]; 3];
        let vals = [[0.1, 0.2, -0.3], [0.4, -0.5, 0.6], [0.7, 0.8, 0.9]];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = scalar(vals[i][j]);
            }
        }
        let lin = LinearSystemSpec {
            n: 3,
            lambda0: vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)], vec![c(0.0, 2.0)]],
            lambda1: vec![vec![c(0.1, 0.0)], vec![c(0.0, 0.0)], vec![c(-0.2, 0.0)]],
            r,
        };
        let spec = riccati_reduce(&lin).unwrap();
        let x = c(0.2, 0.1);
        let eps = c(0.01, -0.01);
        let u: Vec<C64> = (0..6).map(|k| c(0.05 * k as f64, -0.03 * k as f64 + 0.01)).collect();
        let f = spec.eval_rhs(x, &u, eps);
        let um = u_matrix(&lin, &u) + DMatrix::identity(3, 3);
        let rm = lin.r_at(x, eps);
        let ru = &rm * &um;
        let d = DMatrix::from_diagonal(&ru.diagonal());
        let q = x * x - eps;
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lin.lambda_at(x, eps)));
        let uu = u_matrix(&lin, &u);
        let expect = &lam * &uu - &uu * &lam + (ru - &um * d) * q;
        for (i, j) in lin.pairs() {
            assert!((f[lin.pair_index(i, j)] - expect[(i, j)]).norm() < 1e-14);
        }
    }

    #[test]
    fn trivial_normalization() {
        let lin = desk_case(0.0, 0.0);
        let s = SqrtEps(C64::from_polar(0.1, PI / 6.0));
        let x = inverse_time(c(1.0, -5.0), s).unwrap();
        let t = assemble_t(&lin, |_: C64| Ok(vec![c(0.0, 0.0); 2]), s, x, PI / 2.0, 32).unwrap();
        assert!((t.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
        let r = normalization_residual(&lin, |_| Ok(DMatrix::identity(2, 2)), x, s, c(1e-3, 0.0)).unwrap();
        assert!(r < 1e-15);
        let at_s = assemble_t(&lin, |_: C64| Ok(vec![c(0.0, 0.0); 2]), s, SheetPoint::new(s.value()), PI / 2.0, 32).unwrap();
        assert_eq!(at_s, DMatrix::identity(2, 2));
    }
}
