//! Borel and Laplace transforms: the periodic kernels χ±, closed forms for
//! B±[(x−√ε)^a(x+√ε)^b], contour quadrature on the lifted time lines, Laplace
//! integrals of sampled lines, and the Borel images of a system's right-hand side.
//!
//! Conventions. On the time line t = C·e^{−iα} + i·e^{−iα}u (u ∈ ℝ increasing)
//! B[f](ξ) = (1/2πi)∫ f(x(t))·e^{tξ} dt, and L[φ](t) = ∫ φ(ξ)·e^{−tξ} dξ along
//! ξ = c + e^{iα}u. The + side uses C ∈ (0, W), the − side C ∈ (−W, 0), with
//! W the strip width of [`SqrtEps::strip_width`].

use crate::error::{Error, Result};
use crate::geometry::{inverse_time, time_coord_lenient, SheetPoint, Side, SqrtEps};
use crate::line_calculus::{DiracAtom, GridKind, LineFunction};
use crate::numerics::{binomial, expm1, is_finite, ln_gamma, z_over_expm1, GaussRule, I};
use crate::series_core::{mobius_fourier_coeffs, FourierSide, MultiIndex, PowerSeries1, SystemSpec};
use crate::C64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Distance (in units of 2√ε) below which ξ counts as a χ pole.
pub const CHI_POLE_TOL: f64 = 1e-12;
/// Relative tail bound accepted by the contour quadrature.
pub const QUAD_TAIL_TOL: f64 = 1e-9;
/// Gauss order per panel for all composite rules in this module.
const PANEL_ORDER: usize = 16;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Position of ξ on the line e^{iα}ℝ at ε = 0: 1 ahead of 0, ½ at 0, 0 behind.
fn heaviside(xi: C64, alpha: f64) -> f64 {
    let u = (C64::from_polar(1.0, -alpha) * xi).re;
    if u.abs() <= 1e-14 * xi.norm().max(1e-300) || xi.norm() == 0.0 {
        0.5
    } else if u > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// χ⁺ = 1/(1−e^{ξπi/√ε}) and χ⁻ = e^{ξπi/√ε}χ⁺ = χ⁺ − 1; at ε = 0 the
/// Heaviside values 1, ½, 0 along e^{iα}ℝ, with χ⁻ = χ⁺ − 1.
pub fn chi_eval(xi: C64, side: Side, s: SqrtEps, alpha: f64) -> Result<C64> {
    if s.is_zero() {
        let h = heaviside(xi, alpha);
        return Ok(C64::new(if side == Side::Plus { h } else { h - 1.0 }, 0.0));
    }
    let ratio = xi / (2.0 * s.value());
    if (ratio - C64::new(ratio.re.round(), 0.0)).norm() < CHI_POLE_TOL {
        return Err(Error::ChiPole(format!("{xi}")));
    }
    let q = xi * PI * I / s.value();
    Ok(match (side, q.re <= 0.0) {
        (Side::Plus, true) => -1.0 / expm1(q),
        (Side::Plus, false) => (-q).exp() / expm1(-q),
        (Side::Minus, true) => -q.exp() / expm1(q),
        (Side::Minus, false) => 1.0 / expm1(-q),
    })
}

/// ξ·χ±(ξ), continuous through its removable point ξ = 0 (value √ε·i/π on the + side).
pub fn xi_chi(xi: C64, side: Side, s: SqrtEps) -> Result<C64> {
    xi_chi_dir(xi, side, s, 0.0)
}

/// [`xi_chi`] with a direction for the ε = 0 convention.
pub fn xi_chi_dir(xi: C64, side: Side, s: SqrtEps, alpha: f64) -> Result<C64> {
    if s.is_zero() {
        return Ok(xi * chi_eval(xi, side, s, alpha)?);
    }
    let sv = s.value();
    if (xi / (2.0 * sv)).norm() < 0.25 {
        let q = xi * PI * I / sv;
        let plus = -(sv / (PI * I)) * z_over_expm1(q);
        return Ok(if side == Side::Plus { plus } else { plus - xi });
    }
    Ok(xi * chi_eval(xi, side, s, alpha)?)
}

/// χ±(ξ)·poly(ξ − shift) with poly in ascending coefficients; the closed form of
/// B±[(x−√ε)^a(x+√ε)^b] and of sums of such terms.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBorel {
    pub s: SqrtEps,
    pub poly: Vec<C64>,
    pub shift: C64,
    pub side: Side,
    /// Validity strip ξ ∈ {κ√ε + e^{iα}ℝ : κ ∈ (lo, hi)}.
    pub kappa_range: (f64, f64),
}

fn horner(poly: &[C64], z: C64) -> C64 {
    poly.iter().rev().fold(zero(), |acc, c| acc * z + c)
}

/// Quotient of poly by (z − z0); the remainder poly(z0) is dropped.
fn deflate(poly: &[C64], z0: C64) -> Vec<C64> {
    if poly.len() <= 1 {
        return vec![];
    }
    let d = poly.len() - 1;
    let mut q = vec![zero(); d];
    let mut carry = poly[d];
    for k in (0..d).rev() {
        q[k] = carry;
        carry = poly[k] + carry * z0;
    }
    q
}

impl MonomialBorel {
    pub fn zero(s: SqrtEps, side: Side) -> Self {
        MonomialBorel { s, poly: vec![], shift: zero(), side, kappa_range: (f64::NEG_INFINITY, f64::INFINITY) }
    }

    pub fn degree(&self) -> Option<usize> {
        self.poly.iter().rposition(|c| c.norm() != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    pub fn poly_eval(&self, xi: C64) -> C64 {
        horner(&self.poly, xi - self.shift)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.poly.iter_mut().for_each(|p| *p *= c);
        out
    }

    /// Sum of two closed forms with the same kernel, side and shift.
    pub fn add(&self, other: &MonomialBorel) -> Result<Self> {
        if self.side != other.side || self.s != other.s || self.shift != other.shift {
            return Err(Error::InvalidInput("closed forms with different kernels cannot be added".into()));
        }
        let len = self.poly.len().max(other.poly.len());
        let mut poly = vec![zero(); len];
        for (k, p) in poly.iter_mut().enumerate() {
            *p = self.poly.get(k).cloned().unwrap_or_default() + other.poly.get(k).cloned().unwrap_or_default();
        }
        Ok(MonomialBorel {
            s: self.s,
            poly,
            shift: self.shift,
            side: self.side,
            kappa_range: (self.kappa_range.0.max(other.kappa_range.0), self.kappa_range.1.min(other.kappa_range.1)),
        })
    }

    /// Value at ξ; α only matters at ε = 0. Lattice points where the
    /// polynomial vanishes are removable and evaluated by deflation.
    pub fn eval(&self, xi: C64, alpha: f64) -> Result<C64> {
        let z = xi - self.shift;
        if self.is_zero() {
            return Ok(zero());
        }
        if self.s.is_zero() {
            return Ok(horner(&self.poly, z) * chi_eval(z, self.side, self.s, alpha)?);
        }
        let sv = self.s.value();
        let k = (z / (2.0 * sv)).re.round();
        let z0 = 2.0 * sv * k;
        let scale: f64 = self.poly.iter().enumerate().map(|(p, c)| c.norm() * z0.norm().powi(p as i32)).sum();
        if horner(&self.poly, z0).norm() <= 1e-12 * scale.max(1e-300) {
            let q = deflate(&self.poly, z0);
            return Ok(horner(&q, z) * xi_chi(z - z0, self.side, self.s)?);
        }
        Ok(horner(&self.poly, z) * chi_eval(z, self.side, self.s, alpha)?)
    }
}

/// B±[(x−√ε)^a(x+√ε)^b] = χ±(ξ)·Π_{j=1}^{a+b−1}((ξ+2b√ε)/j − 2√ε).
pub fn borel_monomial(a: u32, b: u32, s: SqrtEps, side: Side) -> Result<MonomialBorel> {
    if a + b == 0 {
        return Err(Error::InvalidInput("constants transform to Dirac atoms, not closed forms".into()));
    }
    let sv = s.value();
    let mut poly = vec![C64::new(1.0, 0.0)];
    for j in 1..(a + b) {
        // multiply by (ξ/j + 2b√ε/j − 2√ε)
        let c0 = 2.0 * b as f64 * sv / j as f64 - 2.0 * sv;
        let c1 = 1.0 / j as f64;
        let mut next = vec![zero(); poly.len() + 1];
        for (k, p) in poly.iter().enumerate() {
            next[k] += p * c0;
            next[k + 1] += p * c1;
        }
        poly = next;
    }
    Ok(MonomialBorel { s, poly, shift: zero(), side, kappa_range: (-2.0 * b as f64, 2.0 * a as f64) })
}

/// e^{−ξπi/2√ε + aπi}·(2√ε)^{a+b−1}·(1/2πi)·Beta(a − ξ/2√ε, b + ξ/2√ε), the + side
/// Borel transform of (x−√ε)^a(x+√ε)^b for complex exponents.
pub fn borel_beta(a: C64, b: C64, xi: C64, s: SqrtEps) -> Result<C64> {
    if s.is_zero() {
        return Err(Error::Precondition("the Beta closed form needs ε ≠ 0".into()));
    }
    if (a + b).re <= 0.0 {
        return Err(Error::Precondition("Re(a+b) must be positive".into()));
    }
    let sv = s.value();
    let z = xi / (2.0 * sv);
    let p = a - z;
    let q = b + z;
    let lb = ln_gamma(p)? + ln_gamma(q)? - ln_gamma(p + q)?;
    let pref = -xi * PI * I / (2.0 * sv) + a * PI * I + (a + b - 1.0) * (2.0 * sv).ln();
    let v = (pref + lb).exp() / (2.0 * PI * I);
    if !is_finite(v) {
        return Err(Error::BetaPole(format!("ξ = {xi}")));
    }
    Ok(v)
}

/// u-range and panel count that make the contour quadrature of a function
/// O(|x−√ε|^a|x+√ε|^b) converge to roundoff at ξ.
pub fn default_quad_range(s: SqrtEps, alpha: f64, xi: C64, a: f64, b: f64) -> (f64, usize) {
    let v = (C64::from_polar(1.0, -alpha) * xi).re.abs();
    let t = if s.is_zero() {
        (100.0 + 400.0 / v.max(1e-3)).min(2e5)
    } else {
        let rot = C64::from_polar(1.0, -alpha);
        let unit = (rot * s.value()).im;
        let kappa = (rot * xi).im / unit;
        let speed = unit.abs();
        let rate = (speed * (2.0 * a - kappa)).min(speed * (2.0 * b + kappa));
        (40.0 / rate.max(1e-6)).min(2e4)
    };
    let width = (3.0 / v.max(1e-9)).min(2.0);
    (t, (2.0 * t / width).ceil() as usize)
}

/// Time-line offset C for the contour quadrature at ξ: mid-strip unless
/// e^{C·Re(e^{−iα}ξ)} would cause heavy cancellation, then nearer the cheap edge.
pub fn default_time_offset(side: Side, alpha: f64, s: SqrtEps, xi: C64) -> f64 {
    let w = if s.is_zero() { 2.0 } else { s.strip_width(alpha) };
    let v = (C64::from_polar(1.0, -alpha) * xi).re * side.sign();
    let frac = 0.5 - 0.35 * (v * w / 8.0).tanh();
    side.sign() * frac * w
}

/// Smooth flat-top window: 1 on |v| ≤ ½, 0 for |v| ≥ 1.
fn flat_top(v: f64) -> f64 {
    let a = v.abs();
    if a <= 0.5 {
        return 1.0;
    }
    if a >= 1.0 {
        return 0.0;
    }
    let z = (1.0 - a) / 0.5;
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    f(z) / (f(z) + f(1.0 - z))
}

fn check_time_line(side: Side, alpha: f64, s: SqrtEps, c: f64) -> Result<()> {
    let w = s.strip_width(alpha);
    let ok = match side {
        Side::Plus => c > 0.0 && c < w,
        Side::Minus => c < 0.0 && c > -w,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::OutsideStrip(format!("C = {c} for the {side:?} side of width {w}")))
    }
}

/// (1/2πi)∫ f(x(t), t)·e^{tξ} dt over the time line Re(e^{iα}t) = C, truncated
/// to u ∈ [−T, T] and split in `n` Gauss panels. The evaluator receives the
/// point x and its time t, so branch choices can follow t. At ε = 0 the
/// integral is a principal value, taken with a smooth flat-top window.
#[allow(clippy::too_many_arguments)]
pub fn borel_unfolded_quad<F: Fn(C64, C64) -> C64>(
    f: F,
    side: Side,
    alpha: f64,
    s: SqrtEps,
    xi: C64,
    c: f64,
    t_half: f64,
    n: usize,
) -> Result<C64> {
    check_time_line(side, alpha, s, c)?;
    let rot = C64::from_polar(1.0, -alpha);
    let integrand = |u: f64| -> C64 {
        let t = c * rot + I * rot * u;
        let x = match inverse_time(t, s) {
            Ok(p) => p.x,
            Err(_) => return zero(),
        };
        f(x, t) * (t * xi).exp() * rot / (2.0 * PI)
    };
    let g = GaussRule::new(PANEL_ORDER);
    if s.is_zero() {
        let full = g.integrate(|u| integrand(u) * flat_top(u / t_half), -t_half, t_half, n.max(2));
        let half = g.integrate(|u| integrand(u) * flat_top(2.0 * u / t_half), -t_half / 2.0, t_half / 2.0, (n / 2).max(2));
        let err = (full - half).norm();
        if err > 1e-7 * full.norm().max(1.0) {
            return Err(Error::Quadrature(format!("principal value unsettled: window change {err:.2e}")));
        }
        return Ok(full);
    }
    let val = g.integrate(integrand, -t_half, t_half, n.max(2));
    let tail = tail_estimate(&integrand, t_half) + tail_estimate(&|u| integrand(-u), t_half);
    if !is_finite(val) || tail > QUAD_TAIL_TOL * val.norm().max(1e-5) {
        return Err(Error::Quadrature(format!("tail estimate {tail:.2e} at T = {t_half}")));
    }
    Ok(val)
}

/// ∫_T^∞ |g| from an exponential fit over [T−1, T].
fn tail_estimate<G: Fn(f64) -> C64>(g: &G, t: f64) -> f64 {
    let g1 = g(t).norm();
    if g1 == 0.0 {
        return 0.0;
    }
    let g0 = g(t - 1.0).norm();
    if g0 <= g1 {
        return f64::INFINITY;
    }
    g1 / (g0 / g1).ln()
}

/// Analytic Borel transform at ε = 0 as the principal value over the circle
/// Re(e^{iα}/x) = C, i.e. the time line of the ε = 0 + side.
pub fn borel_analytic_vp<F: Fn(C64) -> C64>(y: F, alpha: f64, xi: C64, c: f64) -> Result<C64> {
    let (t, n) = default_quad_range(SqrtEps::zero(), alpha, xi, 1.0, 1.0);
    borel_unfolded_quad(|x, _| y(x), Side::Plus, alpha, SqrtEps::zero(), xi, c, t, n)
}

/// ∫₀^{Te^{iα}} φ(ξ)e^{−ξ/x} dξ with the exponential tail bound |φ(Te^{iα})|e^{−T·Re(e^{iα}/x)}/Re(e^{iα}/x).
pub fn laplace_ray<F: Fn(C64) -> C64>(phi: F, alpha: f64, x: C64, t_half: f64) -> Result<(C64, f64)> {
    if x.norm() == 0.0 {
        return Err(Error::OutsideStrip("x = 0".into()));
    }
    let dir = C64::from_polar(1.0, alpha);
    let tau = dir / x;
    if tau.re <= 0.0 {
        return Err(Error::OutsideStrip(format!("x = {x} is outside the convergence disc of direction {alpha}")));
    }
    let width = (2.0 / tau.norm()).min(1.0);
    let panels = (t_half / width).ceil() as usize;
    let g = GaussRule::new(PANEL_ORDER);
    let val = g.integrate(|r| phi(dir * r) * (-tau * r).exp() * dir, 0.0, t_half, panels.max(1));
    let tail = phi(dir * t_half).norm() * (-tau.re * t_half).exp() / tau.re;
    Ok((val, tail))
}

/// ∫ φ(ξ)e^{−tξ}dξ over the stored line plus closed-form tails, plus Σ w·e^{−a·t}.
pub fn laplace_line(phi: &LineFunction, atoms: &[DiracAtom], t: C64) -> Result<Vec<C64>> {
    let dim = phi.dim;
    let dir = phi.direction();
    let h = phi.step();
    let mut out = vec![zero(); dim];
    match phi.kind {
        GridKind::Full => {
            for j in 0..phi.n {
                let w = if j == 0 || j == phi.n - 1 { 0.5 * h } else { h };
                let e = (-t * phi.xi(j)).exp() * w * dir;
                for (o, v) in out.iter_mut().zip(phi.node(j)) {
                    *o += v * e;
                }
            }
        }
        GridKind::Ray => {
            let g = GaussRule::new(4);
            for cell in 0..phi.n - 1 {
                let (u0, u1) = (phi.u(cell), phi.u(cell + 1));
                let part = g.integrate_vec(
                    |u| {
                        let e = (-t * (phi.base + dir * u)).exp() * dir;
                        phi.eval_u(u).into_iter().map(|v| v * e).collect()
                    },
                    u0,
                    u1,
                    1,
                    dim,
                );
                for (o, p) in out.iter_mut().zip(part) {
                    *o += p;
                }
            }
        }
    }
    let td = t * dir;
    if let Some(tail) = &phi.tail_hi {
        let xi_end = phi.xi(phi.n - 1);
        for (i, o) in out.iter_mut().enumerate() {
            if tail.amp[i].norm() == 0.0 {
                continue;
            }
            let denom = td - tail.rate[i];
            if denom.re <= 0.0 {
                return Err(Error::NormInfinite(format!("upper tail rate {} against t = {t}", tail.rate[i])));
            }
            *o += tail.amp[i] * dir * (-t * xi_end).exp() / denom;
        }
    }
    if let Some(tail) = &phi.tail_lo {
        let xi_end = phi.xi(0);
        for (i, o) in out.iter_mut().enumerate() {
            if tail.amp[i].norm() == 0.0 {
                continue;
            }
            let denom = tail.rate[i] - td;
            if denom.re <= 0.0 {
                return Err(Error::NormInfinite(format!("lower tail rate {} against t = {t}", tail.rate[i])));
            }
            *o += tail.amp[i] * dir * (-t * xi_end).exp() / denom;
        }
    }
    for atom in atoms {
        let e = (-atom.location * t).exp();
        for (i, o) in out.iter_mut().enumerate() {
            *o += atom.weight[if atom.weight.len() == 1 { 0 } else { i }] * e;
        }
    }
    Ok(out)
}

/// Unfolded Laplace transform at the lifted point x: checks that t(x,ε) lies
/// in the strip (Λ, W−Λ) of the + side (or its mirror for the − side).
pub fn laplace_unfolded(
    phi: &LineFunction,
    atoms: &[DiracAtom],
    x: SheetPoint,
    s: SqrtEps,
    side: Side,
    lambda: f64,
) -> Result<Vec<C64>> {
    let t = time_coord_lenient(x, s)?;
    let r = (C64::from_polar(1.0, phi.alpha) * t).re;
    let w = s.strip_width(phi.alpha);
    let margin = crate::geometry::MEMBERSHIP_MARGIN;
    let inside = match side {
        Side::Plus => r > lambda + margin && r < w - lambda - margin,
        Side::Minus => r < -lambda - margin && r > -w + lambda + margin,
    };
    if !inside {
        return Err(Error::OutsideStrip(format!("Re(e^{{iα}}t) = {r} outside the {side:?} strip")));
    }
    laplace_line(phi, atoms, t)
}

/// Borel images of the right-hand side at a fixed ε.
#[derive(Clone, Debug)]
pub struct RhsBorel {
    pub dim: usize,
    pub s: SqrtEps,
    pub side: Side,
    /// h̃_l = B[(x²−ε)g_l], one closed form per component.
    pub h: BTreeMap<MultiIndex, Vec<MonomialBorel>>,
    /// Coefficient vectors of the x·y^l terms, convolved with x̃.
    pub a: BTreeMap<MultiIndex, Vec<C64>>,
    /// Coefficient vectors of the y^l terms with |l| ≥ 2.
    pub m: BTreeMap<MultiIndex, Vec<C64>>,
}

/// B[(x²−ε)·Σ_p c_p x^p] as one closed form, via x = (x−√ε) + √ε.
pub fn borel_times_q(coeffs: &[C64], s: SqrtEps, side: Side) -> Result<MonomialBorel> {
    let sv = s.value();
    let mut acc = MonomialBorel::zero(s, side);
    for (p, cp) in coeffs.iter().enumerate() {
        if cp.norm() == 0.0 {
            continue;
        }
        for q in 0..=p {
            let coef = cp * binomial(p, q) * sv.powu((p - q) as u32);
            if coef.norm() == 0.0 {
                continue;
            }
            let m = borel_monomial(q as u32 + 1, 1, s, side)?.scale(coef);
            acc = acc.add(&m)?;
        }
    }
    if acc.poly.is_empty() {
        acc = borel_monomial(1, 1, s, side)?.scale(zero());
    }
    Ok(acc)
}

/// Expands each (x²−ε)g_l(x,ε) into (x−√ε)^a(x+√ε)^b monomials and maps them
/// through [`borel_monomial`]; the m- and a-coefficients are evaluated at ε.
pub fn system_rhs_borel(spec: &SystemSpec, s: SqrtEps, side: Side) -> Result<RhsBorel> {
    let eps = s.eps();
    let dim = spec.dim;
    let mut h = BTreeMap::new();
    for (l, poly) in &spec.g_terms {
        let at = poly.at_eps(eps);
        // at[p][i]: coefficient of x^p in component i
        let mut comps = Vec::with_capacity(dim);
        for i in 0..dim {
            let coeffs: Vec<C64> = at.iter().map(|row| row[i]).collect();
            comps.push(borel_times_q(&coeffs, s, side)?);
        }
        if comps.iter().any(|c| !c.is_zero()) {
            h.insert(l.clone(), comps);
        }
    }
    let flat = |terms: &BTreeMap<MultiIndex, crate::series_core::VecPoly>| {
        terms
            .iter()
            .map(|(l, p)| (l.clone(), p.at_eps(eps)[0].clone()))
            .filter(|(_, v)| v.iter().any(|c| c.norm() != 0.0))
            .collect::<BTreeMap<_, _>>()
    };
    Ok(RhsBorel { dim, s, side, h, a: flat(&spec.a_terms), m: flat(&spec.m_terms) })
}

/// Σ_{n≤N} a_n δ_{±2n√ε} for f = Σ a_n w^n with w = ((x∓√ε)/(x±√ε)).
pub fn fourier_borel_atoms(taylor: &PowerSeries1, s: SqrtEps, side: FourierSide, n: usize) -> Result<Vec<DiracAtom>> {
    if s.is_zero() {
        return Err(Error::FourierNeedsEps);
    }
    let a = mobius_fourier_coeffs(taylor, s.value(), side, n)?;
    let step = match side {
        FourierSide::R => 2.0 * s.value(),
        FourierSide::L => -2.0 * s.value(),
    };
    a.into_iter()
        .enumerate()
        .map(|(k, w)| DiracAtom::new(step * k as f64, vec![w]))
        .collect()
}

/// (1/2πi)∮ around ξ0 of a function, on a circle of radius r with `n` nodes.
pub fn circle_residue<F: Fn(C64) -> Result<C64>>(f: F, xi0: C64, r: f64, n: usize) -> Result<C64> {
    let mut acc = zero();
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        let e = C64::from_polar(1.0, th);
        acc += f(xi0 + r * e)? * r * e;
    }
    Ok(acc / n as f64)
}
