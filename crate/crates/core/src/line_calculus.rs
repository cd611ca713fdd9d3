//! Sampled functions on lines ξ = c + e^{iα}u of the Borel plane, strips of
//! parallel lines, convolution (with Dirac atoms and with x̃), and the
//! two-exponential weighted norms.
//!
//! Two grid kinds exist. A full line samples u ∈ [−T, T] on an odd number of
//! uniform nodes, so that u = 0 is the centre node. A ray samples u ∈ [0, T]
//! and carries the one-sided calculus used at ε = 0, where every function is
//! supported on the positive ray.

use crate::error::{Error, Result};
use crate::geometry::{Side, SqrtEps};
use crate::numerics::is_finite;
use crate::transforms::chi_eval;
use crate::C64;
use std::collections::BTreeMap;

/// Number of nodes used by local Lagrange interpolation along a line.
const INTERP_ORDER: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Full,
    Ray,
}

/// Continuation beyond a grid end: v(u) ≈ amp·e^{rate·(u − u_end)} per component.
#[derive(Clone, Debug, PartialEq)]
pub struct TailModel {
    pub amp: Vec<C64>,
    pub rate: Vec<C64>,
}

impl TailModel {
    pub fn zero(dim: usize) -> Self {
        TailModel { amp: vec![C64::new(0.0, 0.0); dim], rate: vec![C64::new(0.0, 0.0); dim] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineFunction {
    pub base: C64,
    pub alpha: f64,
    pub half_width: f64,
    pub n: usize,
    pub dim: usize,
    pub kind: GridKind,
    values: Vec<C64>,
    pub tail_lo: Option<TailModel>,
    pub tail_hi: Option<TailModel>,
}

/// A Dirac mass w·δ_a; convolution with it shifts by a and scales by w.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracAtom {
    pub location: C64,
    pub weight: Vec<C64>,
}

impl DiracAtom {
    pub fn new(location: C64, weight: Vec<C64>) -> Result<Self> {
        if !is_finite(location) || weight.iter().any(|w| !is_finite(*w)) {
            return Err(Error::NonFinite(format!("Dirac atom at {location}")));
        }
        Ok(DiracAtom { location, weight })
    }

    pub fn unit(dim: usize) -> Self {
        DiracAtom { location: C64::new(0.0, 0.0), weight: vec![C64::new(1.0, 0.0); dim] }
    }

    /// δ_a * δ_b = δ_{a+b}, weights multiplied componentwise.
    pub fn compose(&self, other: &DiracAtom) -> Result<DiracAtom> {
        if self.weight.len() != other.weight.len() {
            return Err(Error::GridMismatch("Dirac weight dimensions differ".into()));
        }
        Ok(DiracAtom {
            location: self.location + other.location,
            weight: self.weight.iter().zip(&other.weight).map(|(a, b)| a * b).collect(),
        })
    }
}

impl LineFunction {
    fn check_grid(kind: GridKind, n: usize, t: f64) -> Result<()> {
        if n < 8 {
            return Err(Error::InvalidInput(format!("line needs n ≥ 8 nodes, got {n}")));
        }
        if kind == GridKind::Full && n % 2 == 0 {
            return Err(Error::InvalidInput(format!("full line needs an odd node count, got {n}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("half width must be positive, got {t}")));
        }
        Ok(())
    }

    /// Builds a line from raw node-major samples (n·dim values).
    pub fn from_values(
        base: C64,
        alpha: f64,
        half_width: f64,
        kind: GridKind,
        dim: usize,
        values: Vec<C64>,
    ) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::InvalidInput("sample count is not a multiple of the dimension".into()));
        }
        let n = values.len() / dim;
        Self::check_grid(kind, n, half_width)?;
        if let Some(j) = values.iter().position(|v| !is_finite(*v)) {
            let u = node_u(kind, half_width, n, j / dim);
            return Err(Error::NonFinite(format!("{u}")));
        }
        Ok(LineFunction { base, alpha, half_width, n, dim, kind, values, tail_lo: None, tail_hi: None })
    }

    pub fn zeros(base: C64, alpha: f64, half_width: f64, n: usize, kind: GridKind, dim: usize) -> Result<Self> {
        Self::from_values(base, alpha, half_width, kind, dim, vec![C64::new(0.0, 0.0); n * dim])
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.values.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        z.tail_lo = self.tail_lo.as_ref().map(|t| TailModel::zero(t.amp.len()));
        z.tail_hi = self.tail_hi.as_ref().map(|t| TailModel::zero(t.amp.len()));
        z
    }

    pub fn step(&self) -> f64 {
        match self.kind {
            GridKind::Full => 2.0 * self.half_width / (self.n - 1) as f64,
            GridKind::Ray => self.half_width / (self.n - 1) as f64,
        }
    }

    pub fn centre(&self) -> usize {
        match self.kind {
            GridKind::Full => (self.n - 1) / 2,
            GridKind::Ray => 0,
        }
    }

    pub fn u(&self, j: usize) -> f64 {
        node_u(self.kind, self.half_width, self.n, j)
    }

    pub fn direction(&self) -> C64 {
        C64::from_polar(1.0, self.alpha)
    }

    pub fn xi(&self, j: usize) -> C64 {
        self.base + self.direction() * self.u(j)
    }

    pub fn value(&self, j: usize, i: usize) -> C64 {
        self.values[j * self.dim + i]
    }

    pub fn node(&self, j: usize) -> &[C64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn component(&self, i: usize) -> Vec<C64> {
        (0..self.n).map(|j| self.value(j, i)).collect()
    }

    pub fn same_grid(&self, other: &LineFunction) -> Result<()> {
        if (self.alpha - other.alpha).abs() > 1e-14 {
            return Err(Error::DirectionMismatch);
        }
        if self.n != other.n || self.kind != other.kind || (self.half_width - other.half_width).abs() > 1e-14 {
            return Err(Error::GridMismatch(format!(
                "({:?}, n={}, T={}) vs ({:?}, n={}, T={})",
                self.kind, self.n, self.half_width, other.kind, other.n, other.half_width
            )));
        }
        Ok(())
    }

    /// Componentwise map of the samples, keeping the grid; tails are dropped.
    pub fn map_nodes<F: FnMut(usize, &[C64]) -> Vec<C64>>(&self, dim: usize, mut f: F) -> Result<LineFunction> {
        let mut values = Vec::with_capacity(self.n * dim);
        for j in 0..self.n {
            let v = f(j, self.node(j));
            debug_assert_eq!(v.len(), dim);
            values.extend(v);
        }
        LineFunction::from_values(self.base, self.alpha, self.half_width, self.kind, dim, values)
    }

    pub fn scale(&self, c: C64) -> LineFunction {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        for t in [&mut out.tail_lo, &mut out.tail_hi].into_iter().flatten() {
            t.amp.iter_mut().for_each(|a| *a *= c);
        }
        out
    }

    /// self + c·other on the same grid and base.
    pub fn axpy(&self, c: C64, other: &LineFunction) -> Result<LineFunction> {
        self.same_grid(other)?;
        if self.dim != other.dim {
            return Err(Error::GridMismatch("component counts differ".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        out.tail_lo = None;
        out.tail_hi = None;
        Ok(out)
    }

    /// Fits single-exponential tails on the outer tenth of the nodes.
    pub fn fit_tails(&mut self) {
        let n = self.n;
        let far = (n / 10).max(2);
        let near = (n / 20).max(1);
        let fit = |lf: &LineFunction, j_end: usize, j0: usize, j1: usize| -> TailModel {
            let mut tm = TailModel::zero(lf.dim);
            let du = lf.u(j1) - lf.u(j0);
            for i in 0..lf.dim {
                let (v0, v1) = (lf.value(j0, i), lf.value(j1, i));
                if v0.norm() == 0.0 || v1.norm() == 0.0 || du == 0.0 {
                    continue;
                }
                let rate = (v1 / v0).ln() / du;
                tm.rate[i] = rate;
                tm.amp[i] = v1 * (rate * (lf.u(j_end) - lf.u(j1))).exp();
            }
            tm
        };
        self.tail_hi = Some(fit(self, n - 1, n - 1 - far, n - 1 - near));
        self.tail_lo = match self.kind {
            GridKind::Full => Some(fit(self, 0, far, near)),
            GridKind::Ray => None,
        };
    }

    /// Value at an arbitrary line parameter: local Lagrange interpolation
    /// inside the grid, tail models outside (zero when no tail is attached).
    pub fn eval_u(&self, u: f64) -> Vec<C64> {
        let lo = self.u(0);
        let hi = self.u(self.n - 1);
        if u > hi {
            return tail_value(self.tail_hi.as_ref(), self.dim, u - hi);
        }
        if u < lo {
            return tail_value(self.tail_lo.as_ref(), self.dim, u - lo);
        }
        let h = self.step();
        let pos = (u - lo) / h;
        let k = INTERP_ORDER.min(self.n);
        let start = ((pos.floor() as isize) - (k as isize / 2 - 1)).clamp(0, (self.n - k) as isize) as usize;
        let nodes: Vec<f64> = (start..start + k).map(|j| j as f64).collect();
        if let Some(j) = nodes.iter().position(|x| (x - pos).abs() < 1e-13) {
            return self.node(start + j).to_vec();
        }
        // barycentric weights for equispaced nodes: (−1)^j·C(k−1, j)
        let mut wsum = 0.0;
        let mut acc = vec![C64::new(0.0, 0.0); self.dim];
        for (jj, x) in nodes.iter().enumerate() {
            let w = crate::numerics::binomial(k - 1, jj) * if jj % 2 == 0 { 1.0 } else { -1.0 } / (pos - x);
            wsum += w;
            for (a, v) in acc.iter_mut().zip(self.node(start + jj)) {
                *a += v * w;
            }
        }
        acc.into_iter().map(|a| a / wsum).collect()
    }

    /// CSV header and rows: u, re(ξ), im(ξ), then re/im per component.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["u".to_string(), "re_xi".into(), "im_xi".into()];
        for i in 0..self.dim {
            h.push(format!("re_v{i}"));
            h.push(format!("im_v{i}"));
        }
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|j| {
                let xi = self.xi(j);
                let mut row = vec![self.u(j), xi.re, xi.im];
                for v in self.node(j) {
                    row.push(v.re);
                    row.push(v.im);
                }
                row
            })
            .collect()
    }
}

fn node_u(kind: GridKind, t: f64, n: usize, j: usize) -> f64 {
    match kind {
        GridKind::Full => -t + 2.0 * t * j as f64 / (n - 1) as f64,
        GridKind::Ray => t * j as f64 / (n - 1) as f64,
    }
}

fn tail_value(tm: Option<&TailModel>, dim: usize, du: f64) -> Vec<C64> {
    match tm {
        Some(t) => t.amp.iter().zip(&t.rate).map(|(a, r)| a * (r * du).exp()).collect(),
        None => vec![C64::new(0.0, 0.0); dim],
    }
}

/// Samples an evaluator at ξ = c + e^{iα}u_j on a full line.
pub fn make_line_function<F: FnMut(C64) -> Vec<C64>>(
    mut evaluator: F,
    c: C64,
    alpha: f64,
    half_width: f64,
    n: usize,
    tail_fit: bool,
) -> Result<LineFunction> {
    LineFunction::check_grid(GridKind::Full, n, half_width)?;
    let dir = C64::from_polar(1.0, alpha);
    let mut values = Vec::new();
    let mut dim = 0;
    for j in 0..n {
        let v = evaluator(c + dir * node_u(GridKind::Full, half_width, n, j));
        if j == 0 {
            dim = v.len();
        }
        values.extend(v);
    }
    let mut lf = LineFunction::from_values(c, alpha, half_width, GridKind::Full, dim, values)?;
    if tail_fit {
        lf.fit_tails();
    }
    Ok(lf)
}

/// Samples an evaluator on the ray ξ = e^{iα}u, u ∈ [0, T].
pub fn make_ray_function<F: FnMut(C64) -> Vec<C64>>(
    mut evaluator: F,
    alpha: f64,
    half_width: f64,
    n: usize,
    tail_fit: bool,
) -> Result<LineFunction> {
    LineFunction::check_grid(GridKind::Ray, n, half_width)?;
    let dir = C64::from_polar(1.0, alpha);
    let mut values = Vec::new();
    let mut dim = 0;
    for j in 0..n {
        let v = evaluator(dir * node_u(GridKind::Ray, half_width, n, j));
        if j == 0 {
            dim = v.len();
        }
        values.extend(v);
    }
    let mut lf = LineFunction::from_values(C64::new(0.0, 0.0), alpha, half_width, GridKind::Ray, dim, values)?;
    if tail_fit {
        lf.fit_tails();
    }
    Ok(lf)
}

/// Quadrature weights (in units of h) for ∫ over j+1 equispaced nodes:
/// trapezoid, Simpson, 3/8, Boole, then fourth-order Gregory end corrections.
pub fn ray_weights(j: usize) -> Vec<f64> {
    match j {
        0 => vec![0.0],
        1 => vec![0.5, 0.5],
        2 => vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => vec![3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        4 => [7.0, 32.0, 12.0, 32.0, 7.0].iter().map(|w| w * 2.0 / 45.0).collect(),
        _ => {
            let mut w = vec![1.0; j + 1];
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (k, e) in ends.iter().enumerate() {
                w[k] = *e;
                w[j - k] = *e;
            }
            w
        }
    }
}

/// Scalar product of componentwise convolution: out_i = Σ_k φ_{k,iφ}·ψ_{·,iψ}.
/// The component pairing is (i, i) when both are dim d, or broadcast when one is scalar.
fn pair_dims(a: usize, b: usize) -> Result<usize> {
    if a == b || b == 1 {
        Ok(a)
    } else if a == 1 {
        Ok(b)
    } else {
        Err(Error::GridMismatch(format!("component counts {a} and {b}")))
    }
}

fn comp(d: usize, i: usize) -> usize {
    if d == 1 {
        0
    } else {
        i
    }
}

/// (φ*ψ)(ξ) = ∫ φ(σ)ψ(ξ−σ)dσ along the line through φ's base.
/// Full lines use the grid-aligned rectangle rule, exact to the spectral
/// accuracy of the trapezoid rule for samples decaying at both ends; rays use
/// the one-sided rule on [0, ξ]. Samples beyond the grid contribute nothing.
pub fn convolve(phi: &LineFunction, psi: &LineFunction) -> Result<LineFunction> {
    phi.same_grid(psi)?;
    let dim = pair_dims(phi.dim, psi.dim)?;
    let n = phi.n;
    let h = phi.step();
    let dir = phi.direction();
    let mut values = vec![C64::new(0.0, 0.0); n * dim];
    match phi.kind {
        GridKind::Full => {
            let nc = phi.centre() as isize;
            for j in 0..n as isize {
                // ψ index j − k + nc must lie in [0, n)
                let k_lo = (j + nc - (n as isize - 1)).max(0);
                let k_hi = (j + nc).min(n as isize - 1);
                for i in 0..dim {
                    let (ip, iq) = (comp(phi.dim, i), comp(psi.dim, i));
                    let mut acc = C64::new(0.0, 0.0);
                    for k in k_lo..=k_hi {
                        acc += phi.value(k as usize, ip) * psi.value((j - k + nc) as usize, iq);
                    }
                    values[j as usize * dim + i] = acc * h * dir;
                }
            }
        }
        GridKind::Ray => {
            for j in 0..n {
                let w = ray_weights(j);
                for i in 0..dim {
                    let (ip, iq) = (comp(phi.dim, i), comp(psi.dim, i));
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, wk) in w.iter().enumerate() {
                        acc += phi.value(k, ip) * psi.value(j - k, iq) * *wk;
                    }
                    values[j * dim + i] = acc * h * dir;
                }
            }
        }
    }
    let mut out = LineFunction::from_values(phi.base + psi.base, phi.alpha, phi.half_width, phi.kind, dim, values)?;
    if phi.tail_hi.is_some() || psi.tail_hi.is_some() {
        out.fit_tails();
    }
    Ok(out)
}

/// w·φ(· − a): the base moves by a and the samples are scaled by w.
pub fn convolve_dirac(atom: &DiracAtom, phi: &LineFunction) -> Result<LineFunction> {
    let dim = pair_dims(atom.weight.len(), phi.dim)?;
    let mut out = phi.map_nodes(dim, |_, v| {
        (0..dim).map(|i| atom.weight[comp(atom.weight.len(), i)] * v[comp(phi.dim, i)]).collect()
    })?;
    out.base = phi.base + atom.location;
    let scale_tail = |t: &Option<TailModel>| {
        t.as_ref().map(|t| TailModel {
            amp: (0..dim).map(|i| atom.weight[comp(atom.weight.len(), i)] * t.amp[comp(phi.dim, i)]).collect(),
            rate: (0..dim).map(|i| t.rate[comp(phi.dim, i)]).collect(),
        })
    };
    out.tail_lo = scale_tail(&phi.tail_lo);
    out.tail_hi = scale_tail(&phi.tail_hi);
    Ok(out)
}

/// Functions on the parallel lines c_k + e^{iα}ℝ with c_k = k·√ε/2, k ∈ {−2,…,2}.
/// At ε = 0 the lattice collapses to the single ray k = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct StripFunction {
    pub alpha: f64,
    pub s: SqrtEps,
    pub lines: BTreeMap<i32, LineFunction>,
}

/// Half-step indices of the offset lattice.
pub const OFFSET_LATTICE: [i32; 5] = [-2, -1, 0, 1, 2];

impl StripFunction {
    pub fn new(alpha: f64, s: SqrtEps, lines: BTreeMap<i32, LineFunction>) -> Result<Self> {
        if !lines.contains_key(&0) {
            return Err(Error::MissingOffset("central line".into()));
        }
        for (k, lf) in &lines {
            if k.abs() > 3 {
                return Err(Error::InvalidInput(format!("offset index {k} outside [−3√ε/2, 3√ε/2]")));
            }
            if (lf.base - offset_of(s, *k)).norm() > 1e-12 * (1.0 + s.abs()) {
                return Err(Error::InvalidInput(format!("line base {} does not match offset {k}", lf.base)));
            }
            if (lf.alpha - alpha).abs() > 1e-14 {
                return Err(Error::DirectionMismatch);
            }
        }
        Ok(StripFunction { alpha, s, lines })
    }

    /// Samples an evaluator on every lattice line (only the ray at ε = 0).
    pub fn from_evaluator<F: FnMut(C64) -> Vec<C64>>(
        mut evaluator: F,
        alpha: f64,
        s: SqrtEps,
        half_width: f64,
        n: usize,
        tail_fit: bool,
    ) -> Result<Self> {
        let mut lines = BTreeMap::new();
        if s.is_zero() {
            lines.insert(0, make_ray_function(&mut evaluator, alpha, half_width, n, tail_fit)?);
        } else {
            for k in OFFSET_LATTICE {
                lines.insert(k, make_line_function(&mut evaluator, offset_of(s, k), alpha, half_width, n, tail_fit)?);
            }
        }
        StripFunction::new(alpha, s, lines)
    }

    pub fn offset(&self, k: i32) -> C64 {
        offset_of(self.s, k)
    }

    pub fn line(&self, k: i32) -> Result<&LineFunction> {
        self.lines.get(&k).ok_or_else(|| Error::MissingOffset(format!("{}", self.offset(k))))
    }

    pub fn central(&self) -> &LineFunction {
        &self.lines[&0]
    }

    pub fn dim(&self) -> usize {
        self.central().dim
    }

    pub fn map_lines<F: FnMut(i32, &LineFunction) -> Result<LineFunction>>(&self, mut f: F) -> Result<StripFunction> {
        let mut lines = BTreeMap::new();
        for (k, lf) in &self.lines {
            lines.insert(*k, f(*k, lf)?);
        }
        Ok(StripFunction { alpha: self.alpha, s: self.s, lines })
    }

    pub fn zeros_like(&self, dim: usize) -> Result<StripFunction> {
        self.map_lines(|_, lf| LineFunction::zeros(lf.base, lf.alpha, lf.half_width, lf.n, lf.kind, dim))
    }

    pub fn axpy(&self, c: C64, other: &StripFunction) -> Result<StripFunction> {
        self.map_lines(|k, lf| lf.axpy(c, other.line(k)?))
    }

    /// Largest nodewise max-component difference over all shared lines.
    pub fn sup_diff(&self, other: &StripFunction) -> f64 {
        let mut d: f64 = 0.0;
        for (k, lf) in &self.lines {
            if let Some(o) = other.lines.get(k) {
                for (a, b) in lf.values().iter().zip(o.values()) {
                    d = d.max((a - b).norm());
                }
            }
        }
        d
    }
}

pub fn offset_of(s: SqrtEps, k: i32) -> C64 {
    s.value() * (k as f64 / 2.0)
}

/// Pointwise convolution of two strips: the target line at offset c pairs φ
/// on offset c with ψ on the central line.
pub fn convolve_strips(phi: &StripFunction, psi: &StripFunction) -> Result<StripFunction> {
    let centre = psi.central();
    phi.map_lines(|_, lf| convolve(lf, centre))
}

/// x̃ ± * φ on every stored line.
///
/// For ε ≠ 0 and a target offset c ≥ 0 (along √ε) the kernel line passes
/// through √ε, the argument line through c − √ε, and the residue term is +√ε·φ.
/// For c < 0 the kernel line passes through −√ε, the argument line through
/// c + √ε, and the residue term is −√ε·φ. At ε = 0 the + side is the
/// cumulative integral ∫₀^ξ φ on the ray.
pub fn convolve_xtilde(phi: &StripFunction, side: Side) -> Result<StripFunction> {
    let s = phi.s;
    if s.is_zero() {
        if side == Side::Minus {
            return Err(Error::Precondition("at ε = 0 the − side is the + side in direction α+π".into()));
        }
        return phi.map_lines(|_, lf| {
            if lf.kind != GridKind::Ray {
                return Err(Error::GridMismatch("ε = 0 needs ray samples".into()));
            }
            let h = lf.step();
            let dir = lf.direction();
            let mut values = vec![C64::new(0.0, 0.0); lf.n * lf.dim];
            // running fourth-order cumulative integral
            for j in 1..lf.n {
                let w = ray_weights(j);
                for i in 0..lf.dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, wk) in w.iter().enumerate() {
                        acc += lf.value(k, i) * *wk;
                    }
                    values[j * lf.dim + i] = acc * h * dir;
                }
            }
            let mut out = LineFunction::from_values(lf.base, lf.alpha, lf.half_width, lf.kind, lf.dim, values)?;
            if lf.tail_hi.is_some() {
                out.fit_tails();
            }
            Ok(out)
        });
    }
    let sv = s.value();
    let mut lines = BTreeMap::new();
    for (&k, lf) in &phi.lines {
        // target offset c = k·√ε/2; kernel through ±√ε, argument on offset k ∓ 2
        let (kernel_c, arg_k, residue) = if k >= 0 { (sv, k - 2, sv) } else { (-sv, k + 2, -sv) };
        let arg = phi.line(arg_k)?;
        let dir = lf.direction();
        let h = lf.step();
        let n = lf.n;
        let nc = lf.centre() as isize;
        let kernel: Vec<C64> = (0..n)
            .map(|j| chi_eval(kernel_c + dir * lf.u(j), side, s, phi.alpha))
            .collect::<Result<_>>()?;
        let mut values = vec![C64::new(0.0, 0.0); n * lf.dim];
        for j in 0..n as isize {
            let k_lo = (j + nc - (n as isize - 1)).max(0);
            let k_hi = (j + nc).min(n as isize - 1);
            for i in 0..lf.dim {
                let mut acc = C64::new(0.0, 0.0);
                for kk in k_lo..=k_hi {
                    acc += kernel[kk as usize] * arg.value((j - kk + nc) as usize, i);
                }
                values[j as usize * lf.dim + i] = acc * h * dir + residue * lf.value(j as usize, i);
            }
        }
        let mut out = LineFunction::from_values(lf.base, lf.alpha, lf.half_width, lf.kind, lf.dim, values)?;
        if lf.tail_hi.is_some() {
            out.fit_tails();
        }
        lines.insert(k, out);
    }
    StripFunction::new(phi.alpha, s, lines)
}

/// Two-exponential weight |e^{−Aξ}| + |e^{−Bξ}|.
pub fn weight(xi: C64, a: C64, b: C64) -> f64 {
    (-a * xi).exp().norm() + (-b * xi).exp().norm()
}

fn check_weights(alpha: f64, a: C64, b: C64) -> Result<()> {
    let dir = C64::from_polar(1.0, alpha);
    if (dir * a).re < (dir * b).re {
        Ok(())
    } else {
        Err(Error::Precondition("weights need Re(e^{iα}A) < Re(e^{iα}B)".into()))
    }
}

fn node_abs(lf: &LineFunction, j: usize) -> f64 {
    lf.node(j).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// sup of |φ|·(|e^{−Aξ}|+|e^{−Bξ}|) over the nodes and the tail models;
/// vector samples use the max-modulus component. Infinite when a tail grows.
pub fn norm_sup(phi: &LineFunction, a: C64, b: C64) -> Result<f64> {
    check_weights(phi.alpha, a, b)?;
    let mut sup: f64 = 0.0;
    for j in 0..phi.n {
        sup = sup.max(node_abs(phi, j) * weight(phi.xi(j), a, b));
    }
    for (tail, sign, j_end) in tails(phi) {
        let xi_end = phi.xi(j_end);
        let dir = phi.direction() * sign;
        for i in 0..phi.dim {
            let amp = tail.amp[i].norm();
            if amp == 0.0 {
                continue;
            }
            let grow = tail.rate[i].re * sign;
            for w in [a, b] {
                let exponent = grow - (w * dir).re;
                if exponent > 1e-14 {
                    return Ok(f64::INFINITY);
                }
                sup = sup.max(amp * (-w * xi_end).exp().norm());
            }
        }
    }
    Ok(sup)
}

fn tails(phi: &LineFunction) -> Vec<(&TailModel, f64, usize)> {
    let mut v = Vec::new();
    if let Some(t) = &phi.tail_hi {
        v.push((t, 1.0, phi.n - 1));
    }
    if let Some(t) = &phi.tail_lo {
        v.push((t, -1.0, 0));
    }
    v
}

/// ∫ |φ|·(|e^{−Aξ}|+|e^{−Bξ}|) |dξ| by the trapezoid rule plus closed-form tails.
pub fn norm_int(phi: &LineFunction, a: C64, b: C64) -> Result<f64> {
    check_weights(phi.alpha, a, b)?;
    let h = phi.step();
    let mut total = 0.0;
    for j in 0..phi.n {
        let end = j == 0 || j == phi.n - 1;
        total += node_abs(phi, j) * weight(phi.xi(j), a, b) * if end { 0.5 * h } else { h };
    }
    for (tail, sign, j_end) in tails(phi) {
        let xi_end = phi.xi(j_end);
        let dir = phi.direction() * sign;
        let mut best: f64 = 0.0;
        for i in 0..phi.dim {
            let amp = tail.amp[i].norm();
            if amp == 0.0 {
                continue;
            }
            let grow = tail.rate[i].re * sign;
            let mut part = 0.0;
            for w in [a, b] {
                let exponent = grow - (w * dir).re;
                if exponent >= 0.0 {
                    return Err(Error::NormInfinite(format!("tail exponent {exponent:.3e} ≥ 0")));
                }
                part += amp * (-w * xi_end).exp().norm() / (-exponent);
            }
            best = best.max(part);
        }
        total += best;
    }
    Ok(total)
}

/// Re-interpolates the strip onto the line through c_new by Lagrange
/// interpolation across the stored offsets at equal line parameter u.
/// Returns the line and the interpolation residual, measured against the
/// stencil that drops the offset farthest from c_new.
pub fn resample_offset(phi: &StripFunction, c_new: C64) -> Result<(LineFunction, f64)> {
    let s = phi.s;
    if s.is_zero() {
        if c_new.norm() == 0.0 {
            return Ok((phi.central().clone(), 0.0));
        }
        return Err(Error::Extrapolation(format!("{c_new} with ε = 0")));
    }
    let tau = c_new / s.value();
    let ks: Vec<i32> = phi.lines.keys().cloned().collect();
    let (kmin, kmax) = (*ks.first().unwrap() as f64 / 2.0, *ks.last().unwrap() as f64 / 2.0);
    if tau.im.abs() > 1e-12 || tau.re < kmin - 1e-12 || tau.re > kmax + 1e-12 {
        return Err(Error::Extrapolation(format!("{c_new}")));
    }
    let tau = tau.re;
    if let Some(k) = ks.iter().find(|k| (**k as f64 / 2.0 - tau).abs() < 1e-12) {
        return Ok((phi.lines[k].clone(), 0.0));
    }
    let lagrange = |nodes: &[i32]| -> Vec<f64> {
        nodes
            .iter()
            .map(|&k| {
                let xk = k as f64 / 2.0;
                nodes.iter().filter(|&&m| m != k).map(|&m| (tau - m as f64 / 2.0) / (xk - m as f64 / 2.0)).product()
            })
            .collect()
    };
    let full = lagrange(&ks);
    let far = *ks
        .iter()
        .max_by(|a, b| ((**a as f64 / 2.0 - tau).abs()).total_cmp(&(**b as f64 / 2.0 - tau).abs()))
        .unwrap();
    let reduced_nodes: Vec<i32> = ks.iter().cloned().filter(|k| *k != far).collect();
    let reduced = lagrange(&reduced_nodes);
    let central = phi.central();
    let mut residual: f64 = 0.0;
    let mut values = Vec::with_capacity(central.n * central.dim);
    for j in 0..central.n {
        for i in 0..central.dim {
            let v: C64 = ks.iter().zip(&full).map(|(k, w)| phi.lines[k].value(j, i) * *w).sum();
            let r: C64 = reduced_nodes.iter().zip(&reduced).map(|(k, w)| phi.lines[k].value(j, i) * *w).sum();
            residual = residual.max((v - r).norm());
            values.push(v);
        }
    }
    let lf = LineFunction::from_values(c_new, phi.alpha, central.half_width, central.kind, central.dim, values)?;
    Ok((lf, residual))
}
