//! The time coordinate t(x,ε) of the field −(x²−ε)∂/∂x, its inverse, sheet
//! bookkeeping on the Riemann surface of t, and membership tests for the
//! x-plane strips, the Borel-plane region Ω(√ε) and the parameter sector S.
//!
//! Branch convention: principal Log with its cut on the segment [−√ε, √ε];
//! sheet k adds k·πi/√ε to t.

use crate::error::{Error, Result};
use crate::numerics::{wrap_angle, I};
use crate::C64;
use std::f64::consts::PI;

/// Default strict-inequality margin for membership tests.
pub const MEMBERSHIP_MARGIN: f64 = 1e-9;

/// Number of interior directions scanned by the existential membership tests.
const ALPHA_SCAN: usize = 721;

/// The parameter √ε; ε = s².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqrtEps(pub C64);

impl SqrtEps {
    pub fn new(re: f64, im: f64) -> Self {
        SqrtEps(C64::new(re, im))
    }
    pub fn zero() -> Self {
        SqrtEps(C64::new(0.0, 0.0))
    }
    pub fn value(&self) -> C64 {
        self.0
    }
    pub fn eps(&self) -> C64 {
        self.0 * self.0
    }
    pub fn is_zero(&self) -> bool {
        self.0.norm() == 0.0
    }
    pub fn abs(&self) -> f64 {
        self.0.norm()
    }
    pub fn arg(&self) -> f64 {
        self.0.arg()
    }
    pub fn scaled(&self, nu: f64) -> Self {
        SqrtEps(self.0 * nu)
    }
    /// −Re(e^{iα}πi/√ε) = π·sin(α − arg √ε)/|√ε|, the width of the t-strips in direction α.
    pub fn strip_width(&self, alpha: f64) -> f64 {
        if self.is_zero() {
            f64::INFINITY
        } else {
            -(C64::from_polar(1.0, alpha) * PI * I / self.0).re
        }
    }
    /// πi/√ε, the period of x(t).
    pub fn period(&self) -> C64 {
        PI * I / self.0
    }
}

/// Directions β₁ < β₂, the angular safety margin η and the radius ρ of the sector S.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionRange {
    pub beta1: f64,
    pub beta2: f64,
    pub eta: f64,
    pub rho: f64,
}

impl DirectionRange {
    pub fn new(beta1: f64, beta2: f64, eta: f64, rho: f64) -> Result<Self> {
        let ok = beta1 < beta2
            && eta > 0.0
            && eta < (beta2 - beta1) / 2.0
            && (beta2 - beta1) / 2.0 <= PI / 2.0 + 1e-15
            && rho > 0.0;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "direction range needs β₁ < β₂, 0 < η < (β₂−β₁)/2 ≤ π/2, ρ > 0 (got {beta1}, {beta2}, {eta}, {rho})"
            )));
        }
        Ok(DirectionRange { beta1, beta2, eta, rho })
    }

    /// The representative of arg √ε in (β₁ − π + η, β₂ − η), if any.
    fn sector_arg(&self, s: SqrtEps) -> Option<f64> {
        let lo = self.beta1 - PI + self.eta;
        let hi = self.beta2 - self.eta;
        let mut a = s.arg();
        while a <= lo {
            a += 2.0 * PI;
        }
        while a - 2.0 * PI > lo {
            a -= 2.0 * PI;
        }
        (a > lo && a < hi).then_some(a)
    }

    /// √ε ∈ S, with 0 ∈ S by convention.
    pub fn contains_sqrt_eps(&self, s: SqrtEps) -> bool {
        s.is_zero() || (s.abs() < self.rho && self.sector_arg(s).is_some())
    }
}

/// Open interval of directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleInterval {
    pub lo: f64,
    pub hi: f64,
}

impl AngleInterval {
    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
    pub fn contains(&self, a: f64) -> bool {
        a > self.lo && a < self.hi
    }
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
    /// d directions placed uniformly inside the open interval.
    pub fn sample(&self, d: usize) -> Vec<f64> {
        (0..d)
            .map(|i| self.lo + (self.hi - self.lo) * (i as f64 + 1.0) / (d as f64 + 1.0))
            .collect()
    }
}

/// A point of the Riemann surface of t: x with the sheet index k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SheetPoint {
    pub x: C64,
    pub sheet: i64,
}

impl SheetPoint {
    pub fn new(x: C64) -> Self {
        SheetPoint { x, sheet: 0 }
    }
    pub fn on_sheet(x: C64, sheet: i64) -> Self {
        SheetPoint { x, sheet }
    }
}

/// Which of the two mirrored strip families (and Borel transforms) is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(&self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// ln(1+z) accurate near z = 0, principal branch for |z| < ½.
fn log1p(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let u = z / (2.0 + z);
        let u2 = u * u;
        let mut term = u;
        let mut sum = u;
        for k in 1..60 {
            term *= u2;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        2.0 * sum
    } else {
        (1.0 + z).ln()
    }
}

/// Log((x−√ε)/(x+√ε)) with principal branch, accurate for large |x|.
fn log_ratio(x: C64, s: C64) -> C64 {
    log1p(-2.0 * s / (x + s))
}

fn on_segment(x: C64, s: C64) -> bool {
    // x = τ·s with τ ∈ [−1, 1]
    let tau = x / s;
    tau.im.abs() <= 1e-14 * tau.norm().max(1.0) && tau.re.abs() <= 1.0
}

/// t on the given sheet, using the principal-Log limit (Im Log = π) on the open cut.
pub(crate) fn time_coord_lenient(p: SheetPoint, s: SqrtEps) -> Result<C64> {
    let sv = s.value();
    if s.is_zero() {
        if p.x.norm() == 0.0 {
            return Err(Error::OnCut("x = 0 at ε = 0".into()));
        }
        return Ok(1.0 / p.x);
    }
    if (p.x - sv).norm() <= 1e-15 * sv.norm() || (p.x + sv).norm() <= 1e-15 * sv.norm() {
        return Err(Error::OnCut(format!("{} is a singular point", p.x)));
    }
    let lg = if on_segment(p.x, sv) {
        let w = (p.x - sv) / (p.x + sv);
        C64::new(w.norm().ln(), PI)
    } else {
        log_ratio(p.x, sv)
    };
    Ok(-lg / (2.0 * sv) + p.sheet as f64 * s.period())
}

/// t(x, ε) = 1/x at ε = 0, else −(1/2√ε)·Log((x−√ε)/(x+√ε)) + k·πi/√ε.
pub fn time_coord(p: SheetPoint, s: SqrtEps) -> Result<C64> {
    if !s.is_zero() && on_segment(p.x, s.value()) {
        return Err(Error::OnCut(format!("{}", p.x)));
    }
    time_coord_lenient(p, s)
}

/// x(t) = √ε·(1+e^{−2√ε t})/(1−e^{−2√ε t}), with the sheet recovered from the log branch.
pub fn inverse_time(t: C64, s: SqrtEps) -> Result<SheetPoint> {
    if s.is_zero() {
        if t.norm() == 0.0 {
            return Err(Error::TimePole("t = 0 at ε = 0".into()));
        }
        return Ok(SheetPoint::new(1.0 / t));
    }
    let sv = s.value();
    let z = -2.0 * sv * t;
    let em1 = crate::numerics::expm1(z);
    if em1.norm() < 1e-14 {
        return Err(Error::TimePole(format!("{t}")));
    }
    let q = z.exp();
    let x = if q.norm() > 1.0 {
        // divide through by q to avoid overflow
        let r = (-z).exp();
        sv * (r + 1.0) / (r - 1.0)
    } else {
        -sv * (1.0 + q) / em1
    };
    // Log q on the principal branch, taking Im = π on the negative axis
    let lq = {
        let w = (x - sv) / (x + sv);
        if on_segment(x, sv) {
            C64::new(w.norm().ln(), PI)
        } else {
            log_ratio(x, sv)
        }
    };
    let k = ((2.0 * sv * t + lq) / (2.0 * PI * I)).re.round() as i64;
    Ok(SheetPoint { x, sheet: k })
}

/// (x−√ε, x+√ε) at time t, from q = e^{−2√ε t}: x−√ε = 2√ε·q/(1−q), x+√ε = 2√ε/(1−q).
/// Unlike differences of x(t), both stay accurate as x approaches ±√ε.
pub fn singular_offsets(t: C64, s: SqrtEps) -> Result<(C64, C64)> {
    if s.is_zero() {
        let x = inverse_time(t, s)?.x;
        return Ok((x, x));
    }
    let sv = s.value();
    let z = -2.0 * sv * t;
    let two_s = 2.0 * sv;
    let out = if z.re <= 0.0 {
        // 1 − q = −expm1(z)
        let d = -crate::numerics::expm1(z);
        if d.norm() < 1e-300 {
            return Err(Error::TimePole(format!("{t}")));
        }
        (two_s * z.exp() / d, two_s / d)
    } else {
        // with p = e^{−z}: x−√ε = 2√ε/(p−1), x+√ε = 2√ε·p/(p−1)
        let d = crate::numerics::expm1(-z);
        if d.norm() < 1e-300 {
            return Err(Error::TimePole(format!("{t}")));
        }
        (two_s / d, two_s * (-z).exp() / d)
    };
    Ok(out)
}

/// (max{arg√ε+η, β₁}, min{β₂, arg√ε+π−η}); at √ε = 0 simply (β₁, β₂).
pub fn admissible_alphas(s: SqrtEps, dr: &DirectionRange) -> Result<AngleInterval> {
    if s.is_zero() {
        return Ok(AngleInterval { lo: dr.beta1, hi: dr.beta2 });
    }
    if !dr.contains_sqrt_eps(s) {
        return Err(Error::NotInSector(format!("{}", s.value())));
    }
    let a = dr.sector_arg(s).expect("checked above");
    Ok(AngleInterval { lo: (a + dr.eta).max(dr.beta1), hi: dr.beta2.min(a + PI - dr.eta) })
}

/// Re(e^{iα}t) for the lifted point, used by all strip tests.
fn rotated_time(p: SheetPoint, alpha: f64, s: SqrtEps) -> Result<f64> {
    let t = time_coord_lenient(p, s)?;
    Ok((C64::from_polar(1.0, alpha) * t).re)
}

fn strip_verdict(r: f64, side: Side, lambda: f64, width: f64, margin: f64) -> bool {
    match side {
        Side::Plus => r > lambda + margin && r < width - lambda - margin,
        Side::Minus => r < -lambda - margin && r > -width + lambda + margin,
    }
}

/// Membership of the lifted point in the x-plane strip of the given side.
pub fn x_strip_contains(p: SheetPoint, side: Side, alpha: f64, lambda: f64, s: SqrtEps) -> Result<bool> {
    x_strip_contains_with_margin(p, side, alpha, lambda, s, MEMBERSHIP_MARGIN)
}

pub fn x_strip_contains_with_margin(
    p: SheetPoint,
    side: Side,
    alpha: f64,
    lambda: f64,
    s: SqrtEps,
    margin: f64,
) -> Result<bool> {
    let width = s.strip_width(alpha);
    if lambda < 0.0 || (!s.is_zero() && 2.0 * lambda >= width) {
        return Err(Error::Precondition(format!(
            "strip needs 0 ≤ 2Λ < width (Λ = {lambda}, width = {width})"
        )));
    }
    let r = match rotated_time(p, alpha, s) {
        Ok(r) => r,
        Err(Error::OnCut(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    Ok(strip_verdict(r, side, lambda, width, margin))
}

/// ξ ∈ Ω_α(√ε) = ⋃_{c∈[−3√ε/2, 3√ε/2]} c + e^{iα}ℝ.
pub fn omega_alpha_contains(xi: C64, alpha: f64, s: SqrtEps, tol: f64) -> bool {
    let rot = C64::from_polar(1.0, -alpha);
    let transverse = (rot * xi).im;
    if s.is_zero() {
        return transverse.abs() <= tol;
    }
    let unit = (rot * s.value()).im;
    transverse.abs() <= 1.5 * unit.abs() + tol
}

/// ξ ∈ Ω_α(√ε) for some admissible α.
pub fn omega_contains(xi: C64, s: SqrtEps, dr: &DirectionRange) -> Result<bool> {
    let iv = admissible_alphas(s, dr)?;
    if iv.is_empty() {
        return Ok(false);
    }
    let tol = MEMBERSHIP_MARGIN * xi.norm().max(s.abs()).max(1.0);
    if s.is_zero() {
        if xi.norm() == 0.0 {
            return Ok(true);
        }
        let a = xi.arg();
        return Ok([a, a + PI, a - PI, a + 2.0 * PI, a - 2.0 * PI].iter().any(|b| iv.contains(*b)));
    }
    Ok(iv.sample(ALPHA_SCAN).into_iter().any(|a| omega_alpha_contains(xi, a, s, tol)))
}

/// Membership in Z(√ε): some admissible α puts the lifted point in a + or − strip.
pub fn z_contains(p: SheetPoint, s: SqrtEps, lambda: f64, dr: &DirectionRange) -> Result<bool> {
    if !s.is_zero() && ((p.x - s.value()).norm() == 0.0 || (p.x + s.value()).norm() == 0.0) {
        // t = ∞ there: the singular points are adherent to Z, not inside it
        return Ok(false);
    }
    let iv = admissible_alphas(s, dr)?;
    if iv.is_empty() {
        return Ok(false);
    }
    let t = match time_coord_lenient(p, s) {
        Ok(t) => t,
        Err(Error::OnCut(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    for a in iv.sample(ALPHA_SCAN) {
        let width = s.strip_width(a);
        if !s.is_zero() && 2.0 * lambda >= width {
            continue;
        }
        let r = (C64::from_polar(1.0, a) * t).re;
        if strip_verdict(r, Side::Plus, lambda, width, MEMBERSHIP_MARGIN)
            || strip_verdict(r, Side::Minus, lambda, width, MEMBERSHIP_MARGIN)
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Samples x(t_j) along the real-time trajectory Re(e^{iα}t) = C,
/// t_j = C·e^{−iα} + i·e^{−iα}·u_j with u_j uniform in [−T, T].
pub fn path_gamma(side: Side, alpha: f64, s: SqrtEps, c: f64, t_half: f64, n: usize) -> Result<Vec<SheetPoint>> {
    let width = s.strip_width(alpha);
    let inside = match side {
        Side::Plus => c > 0.0 && c < width,
        Side::Minus => c < 0.0 && c > -width,
    };
    if !inside {
        return Err(Error::OutsideStrip(format!("C = {c} not inside the {side:?} strip of width {width}")));
    }
    if n < 2 {
        return Err(Error::InvalidInput("path needs at least two samples".into()));
    }
    let rot = C64::from_polar(1.0, -alpha);
    (0..n)
        .map(|j| {
            let u = -t_half + 2.0 * t_half * j as f64 / (n - 1) as f64;
            inverse_time(c * rot + I * rot * u, s)
        })
        .collect()
}

/// Angle distance helper for tie-breaking toward an interval midpoint.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GaussRule;

    fn s01() -> SqrtEps {
        SqrtEps::new(0.1, 0.0)
    }

    #[test]
    fn time_coord_examples() {
        let t = time_coord(SheetPoint::new(C64::new(2.0, 0.0)), SqrtEps::zero()).unwrap();
        assert!((t - 0.5).norm() < 1e-16);
        for s in [s01(), SqrtEps::new(0.03, -0.07), SqrtEps::zero()] {
            let t = time_coord(SheetPoint::new(C64::new(1e8, 3e7)), s).unwrap();
            assert!(t.norm() < 1e-7);
        }
        assert!(matches!(time_coord(SheetPoint::new(C64::new(0.05, 0.0)), s01()), Err(Error::OnCut(_))));
    }

    #[test]
    fn time_coord_matches_path_quadrature() {
        // t(x) − t(x₀) = −∫_{x₀}^{x} dz/(z²−ε) on a straight path avoiding the cut
        let s = s01();
        let x0 = C64::new(0.5, 2.0);
        let x1 = C64::new(0.5, 0.0);
        let g = GaussRule::new(20);
        let integral = g.integrate(|u| {
            let z = x0 + (x1 - x0) * u;
            -(x1 - x0) / (z * z - s.eps())
        }, 0.0, 1.0, 40);
        let t0 = time_coord(SheetPoint::new(x0), s).unwrap();
        let t1 = time_coord(SheetPoint::new(x1), s).unwrap();
        assert!((t1 - t0 - integral).norm() < 1e-10);
    }

    #[test]
    fn inverse_time_examples() {
        let s = s01();
        let p = SheetPoint::new(C64::new(0.5, 0.0));
        let back = inverse_time(time_coord(p, s).unwrap(), s).unwrap();
        assert!((back.x - p.x).norm() < 1e-12 && back.sheet == 0);
        let x = inverse_time(C64::new(0.5, 0.0), SqrtEps::zero()).unwrap();
        assert!((x.x - 2.0).norm() < 1e-15);
        let x = inverse_time(-PI * I / (2.0 * s.value()), s).unwrap();
        assert!(x.x.norm() < 1e-14);
        assert!(matches!(inverse_time(C64::new(0.0, 0.0), s), Err(Error::TimePole(_))));
    }

    #[test]
    fn admissible_examples() {
        let dr = DirectionRange::new(PI / 4.0, 3.0 * PI / 4.0, PI / 12.0, 1.0).unwrap();
        let iv = admissible_alphas(SqrtEps::zero(), &dr).unwrap();
        assert_eq!((iv.lo, iv.hi), (PI / 4.0, 3.0 * PI / 4.0));
        let iv = admissible_alphas(SqrtEps::new(0.1, 0.0), &dr).unwrap();
        assert!((iv.lo - PI / 4.0).abs() < 1e-15 && (iv.hi - 3.0 * PI / 4.0).abs() < 1e-15);
        let a = PI / 2.0 - PI / 24.0;
        let s = SqrtEps(C64::from_polar(0.1, a));
        let iv = admissible_alphas(s, &dr).unwrap();
        assert!((iv.lo - (a + PI / 12.0)).abs() < 1e-12 && iv.lo > PI / 4.0);
        assert!((iv.hi - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!(admissible_alphas(SqrtEps::new(2.0, 0.0), &dr).is_err());
    }

    #[test]
    fn strip_examples() {
        let p = SheetPoint::new(C64::new(0.0, 0.4));
        assert!(x_strip_contains(p, Side::Plus, PI / 2.0, 1.0, SqrtEps::zero()).unwrap());
        // t = −5πi at x = 0 on sheet 0: Re(e^{iπ/2}t) = 5π inside (1, 10π − 1)
        let verdict = x_strip_contains(SheetPoint::new(C64::new(0.0, 0.0)), Side::Plus, PI / 2.0, 1.0, s01()).unwrap();
        let r = 5.0 * PI;
        assert_eq!(verdict, r > 1.0 && r < 10.0 * PI - 1.0);
        // boundary point: Re(e^{iα}t) = Λ exactly
        let s = s01();
        let t = C64::new(0.3, -1.0);
        let x = inverse_time(t, s).unwrap();
        assert!(!x_strip_contains(x, Side::Plus, PI / 2.0, 1.0, s).unwrap());
    }

    #[test]
    fn omega_examples() {
        let dr = DirectionRange::new(PI / 4.0, 3.0 * PI / 4.0, PI / 12.0, 1.0).unwrap();
        let s = SqrtEps::new(0.01, 0.0);
        assert!(omega_contains(C64::new(0.0, 0.0), s, &dr).unwrap());
        assert!(omega_contains(1.5 * s.value(), s, &dr).unwrap());
        assert!(!omega_contains(20.0 * s.value(), s, &dr).unwrap());
    }

    #[test]
    fn z_examples() {
        let dr = DirectionRange::new(PI / 4.0, 3.0 * PI / 4.0, PI / 12.0, 1.0).unwrap();
        let s = s01();
        assert!(!z_contains(SheetPoint::new(s.value()), s, 0.5, &dr).unwrap());
        assert!(z_contains(SheetPoint::new(C64::new(0.0, 0.4)), SqrtEps::zero(), 0.5, &dr).unwrap());
        let x0 = SheetPoint::new(C64::new(0.05, 0.3));
        for j in 0..8 {
            assert!(z_contains(x0, s.scaled(0.5f64.powi(j)), 0.5, &dr).unwrap());
        }
    }

    #[test]
    fn path_examples() {
        let s = s01();
        let pts = path_gamma(Side::Plus, PI / 2.0, s, 2.0, 40.0, 81).unwrap();
        let mid = inverse_time(2.0 * C64::from_polar(1.0, -PI / 2.0), s).unwrap();
        assert!((pts[40].x - mid.x).norm() < 1e-14);
        assert!((pts[80].x - s.value()).norm() < 1e-3);
        assert!((pts[0].x + s.value()).norm() < 1e-3);
        let circ = path_gamma(Side::Plus, PI / 2.0, SqrtEps::zero(), 2.0, 10.0, 11).unwrap();
        for p in circ {
            assert!(((C64::from_polar(1.0, PI / 2.0) / p.x).re - 2.0).abs() < 1e-12);
        }
        assert!(path_gamma(Side::Plus, PI / 2.0, s, -1.0, 1.0, 5).is_err());
    }
}
