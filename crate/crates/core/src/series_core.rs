//! Formal power series, the formal Borel transform, the recursive formal
//! solution of (x²−ε)y′ = M(ε)y + f(x,y,ε), Gevrey diagnostics and the
//! re-expansion of a local Taylor series in powers of (x∓√ε)/(x±√ε).

use crate::error::{Error, Result};
use crate::numerics::{binomial, factorial, is_finite, smallest_singular_value, solve};
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Truncated series Σ_{k=0}^{N} y_k x^k.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries1 {
    coeffs: Vec<C64>,
}

impl PowerSeries1 {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("series needs at least one coefficient".into()));
        }
        if !coeffs.iter().all(|z| is_finite(*z)) {
            return Err(Error::InvalidInput("non-finite series coefficient".into()));
        }
        Ok(PowerSeries1 { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|r| C64::new(*r, 0.0)).collect())
    }

    pub fn trunc_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * x + c)
    }
}

/// φ_j = y_{j+1}/j! for j = 0..N−1.
pub fn formal_borel(s: &PowerSeries1) -> Result<PowerSeries1> {
    if s.trunc_order() < 1 {
        return Err(Error::InvalidInput("formal Borel transform needs order ≥ 1".into()));
    }
    if s.coeffs[0] != ZERO {
        return Err(Error::SeriesNotVanishing);
    }
    let phi = (0..s.trunc_order())
        .map(|j| s.coeffs[j + 1] / factorial(j))
        .collect();
    PowerSeries1::new(phi)
}

/// Growth diagnostic: `c_est = max_k |y_k/k!|^{1/k}`; the flag is false when the
/// root sequence keeps rising over the last third of the truncation.
pub fn gevrey_bound(s: &PowerSeries1) -> Result<(f64, bool)> {
    let n = s.trunc_order();
    if n < 4 {
        return Err(Error::InvalidInput("gevrey_bound needs order ≥ 4".into()));
    }
    let roots: Vec<f64> = (1..=n)
        .map(|k| {
            let lg = s.coeffs[k].norm().ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
            if lg.is_finite() {
                (lg / k as f64).exp()
            } else {
                0.0
            }
        })
        .collect();
    let c_est = roots.iter().cloned().fold(0.0, f64::max);
    let start = (2 * n) / 3;
    let a_hi = roots[n - 1];
    let a_lo = roots[start.max(1) - 1];
    let rising = a_hi > 0.0 && (a_hi - a_lo) / a_hi > GEVREY_TREND_THRESHOLD;
    Ok((c_est, !rising))
}

/// Relative rise of |y_k/k!|^{1/k} over the last third above which growth is
/// flagged as faster than factorial.
pub const GEVREY_TREND_THRESHOLD: f64 = 0.15;

/// Multi-index l ∈ ℕ^m.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }
    pub fn zero(m: usize) -> Self {
        MultiIndex(vec![0; m])
    }
    pub fn unit(m: usize, i: usize) -> Self {
        let mut v = vec![0; m];
        v[i] = 1;
        MultiIndex(v)
    }
    /// l − e_i for the first nonzero entry i, with that i.
    pub fn split_first(&self) -> Option<(MultiIndex, usize)> {
        let i = self.0.iter().position(|&v| v > 0)?;
        let mut v = self.0.clone();
        v[i] -= 1;
        Some((MultiIndex(v), i))
    }
}

/// Polynomial in (x, ε) with coefficients in ℂ^dim, stored as
/// coeffs[((q·(x_deg+1) + p)·dim + i)] for the monomial x^p ε^q, component i.
#[derive(Clone, Debug, PartialEq)]
pub struct VecPoly {
    pub dim: usize,
    pub x_deg: usize,
    pub eps_deg: usize,
    pub coeffs: Vec<C64>,
}

impl VecPoly {
    pub fn zero(dim: usize, x_deg: usize, eps_deg: usize) -> Self {
        VecPoly { dim, x_deg, eps_deg, coeffs: vec![ZERO; dim * (x_deg + 1) * (eps_deg + 1)] }
    }

    /// Constant vector polynomial.
    pub fn constant(v: &[C64]) -> Self {
        VecPoly { dim: v.len(), x_deg: 0, eps_deg: 0, coeffs: v.to_vec() }
    }

    fn idx(&self, p: usize, q: usize, i: usize) -> usize {
        (q * (self.x_deg + 1) + p) * self.dim + i
    }

    pub fn coeff(&self, p: usize, q: usize, i: usize) -> C64 {
        if p > self.x_deg || q > self.eps_deg {
            ZERO
        } else {
            self.coeffs[self.idx(p, q, i)]
        }
    }

    pub fn set(&mut self, p: usize, q: usize, i: usize, v: C64) {
        let k = self.idx(p, q, i);
        self.coeffs[k] = v;
    }

    pub fn add(&self, other: &VecPoly) -> VecPoly {
        let mut out = VecPoly::zero(self.dim, self.x_deg.max(other.x_deg), self.eps_deg.max(other.eps_deg));
        for q in 0..=out.eps_deg {
            for p in 0..=out.x_deg {
                for i in 0..out.dim {
                    out.set(p, q, i, self.coeff(p, q, i) + other.coeff(p, q, i));
                }
            }
        }
        out
    }

    /// x-coefficient vectors at a fixed ε: result[p][i].
    pub fn at_eps(&self, eps: C64) -> Vec<Vec<C64>> {
        (0..=self.x_deg)
            .map(|p| {
                (0..self.dim)
                    .map(|i| {
                        (0..=self.eps_deg)
                            .rev()
                            .fold(ZERO, |acc, q| acc * eps + self.coeff(p, q, i))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn eval(&self, x: C64, eps: C64) -> Vec<C64> {
        let cs = self.at_eps(eps);
        (0..self.dim)
            .map(|i| cs.iter().rev().fold(ZERO, |acc, v| acc * x + v[i]))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| *z == ZERO)
    }
}

/// Which part of the nonlinearity decomposition a term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermKind {
    #[serde(rename = "m")]
    M,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "g")]
    G,
}

/// f = Σ_{|l|≥2} m_l(ε)y^l + x·Σ_{|l|≥1} a_l(ε)y^l + (x²−ε)·Σ_{|l|≥0} g_l(x,ε)y^l,
/// with M(ε) = Σ_j M_j ε^j.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub dim: usize,
    pub m_coeffs: Vec<DMatrix<C64>>,
    pub m_terms: BTreeMap<MultiIndex, VecPoly>,
    pub a_terms: BTreeMap<MultiIndex, VecPoly>,
    pub g_terms: BTreeMap<MultiIndex, VecPoly>,
    pub l1: f64,
    pub lambda1: f64,
    pub rho1: f64,
}

/// Default floor on the smallest singular value of M(0).
pub const SINGULAR_VALUE_FLOOR: f64 = 1e-10;

impl SystemSpec {
    pub fn new(dim: usize, m_coeffs: Vec<DMatrix<C64>>) -> Self {
        SystemSpec {
            dim,
            m_coeffs,
            m_terms: BTreeMap::new(),
            a_terms: BTreeMap::new(),
            g_terms: BTreeMap::new(),
            l1: 1.0,
            lambda1: 0.5,
            rho1: 0.5,
        }
    }

    /// Adds a term; repeated keys of the same kind are summed.
    pub fn add_term(&mut self, kind: TermKind, l: MultiIndex, poly: VecPoly) -> Result<()> {
        if l.0.len() != self.dim || poly.dim != self.dim {
            return Err(Error::InvalidInput("term dimension does not match m".into()));
        }
        let map = match kind {
            TermKind::M => {
                if l.order() < 2 {
                    return Err(Error::InvalidInput("m-terms need |l| ≥ 2".into()));
                }
                &mut self.m_terms
            }
            TermKind::A => {
                if l.order() < 1 {
                    return Err(Error::InvalidInput("a-terms need |l| ≥ 1".into()));
                }
                &mut self.a_terms
            }
            TermKind::G => &mut self.g_terms,
        };
        if kind != TermKind::G && poly.x_deg > 0 {
            return Err(Error::InvalidInput("m- and a-terms may depend on ε only".into()));
        }
        let merged = match map.get(&l) {
            Some(p) => p.add(&poly),
            None => poly,
        };
        map.insert(l, merged);
        Ok(())
    }

    pub fn m_at(&self, eps: C64) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for mj in self.m_coeffs.iter().rev() {
            m = m * eps + mj;
        }
        m
    }

    /// Matrix of the linear a-terms at ε, so that x·Σ_{|l|=1} a_l y^l = x·A₁y.
    pub fn a_linear_at(&self, eps: C64) -> DMatrix<C64> {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for (l, poly) in &self.a_terms {
            if l.order() == 1 {
                let j = l.0.iter().position(|&v| v == 1).unwrap();
                let col = &poly.at_eps(eps)[0];
                for i in 0..self.dim {
                    a[(i, j)] += col[i];
                }
            }
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("m must be positive".into()));
        }
        if self.m_coeffs.is_empty() {
            return Err(Error::InvalidInput("M needs at least the ε⁰ matrix".into()));
        }
        for mj in &self.m_coeffs {
            if mj.nrows() != self.dim || mj.ncols() != self.dim {
                return Err(Error::InvalidInput("M matrices must be m×m".into()));
            }
        }
        if !(self.l1 > 0.0 && self.lambda1 > 0.0 && self.rho1 > 0.0) {
            return Err(Error::InvalidInput("L1, Lambda1, rho1 must be positive".into()));
        }
        let sigma = smallest_singular_value(&self.m_coeffs[0]);
        if sigma < SINGULAR_VALUE_FLOOR {
            return Err(Error::SingularLeading { sigma, floor: SINGULAR_VALUE_FLOOR });
        }
        Ok(())
    }

    /// f(x, y, ε).
    pub fn eval_f(&self, x: C64, y: &[C64], eps: C64) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        let pw = |l: &MultiIndex| -> C64 {
            l.0.iter().zip(y).fold(C64::new(1.0, 0.0), |acc, (&e, yi)| acc * yi.powu(e))
        };
        for (l, p) in &self.m_terms {
            let v = p.eval(x, eps);
            let yl = pw(l);
            for i in 0..self.dim {
                out[i] += v[i] * yl;
            }
        }
        for (l, p) in &self.a_terms {
            let v = p.eval(x, eps);
            let yl = pw(l) * x;
            for i in 0..self.dim {
                out[i] += v[i] * yl;
            }
        }
        let q = x * x - eps;
        for (l, p) in &self.g_terms {
            let v = p.eval(x, eps);
            let yl = pw(l) * q;
            for i in 0..self.dim {
                out[i] += v[i] * yl;
            }
        }
        out
    }

    /// M(ε)y + f(x, y, ε).
    pub fn eval_rhs(&self, x: C64, y: &[C64], eps: C64) -> Vec<C64> {
        let m = self.m_at(eps);
        let mut out = self.eval_f(x, y, eps);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += m[(i, j)] * y[j];
            }
        }
        out
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: SystemSpecJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        raw.into_spec()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SystemSpecJson::from_spec(self)).expect("serializable")
    }
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    eps_degree: usize,
    x_degree: usize,
    coeffs: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    l: Vec<u32>,
    kind: TermKind,
    poly: PolyJson,
}

#[derive(Serialize, Deserialize)]
struct SystemSpecJson {
    m: usize,
    #[serde(rename = "M")]
    m_mats: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    terms: Vec<TermJson>,
    #[serde(rename = "L1")]
    l1: f64,
    #[serde(rename = "Lambda1")]
    lambda1: f64,
    rho1: f64,
}

impl SystemSpecJson {
    fn into_spec(self) -> Result<SystemSpec> {
        let m = self.m;
        let mut mats = Vec::new();
        for flat in &self.m_mats {
            if flat.len() != m * m {
                return Err(Error::InvalidInput(format!(
                    "each M entry must hold m² = {} pairs, got {}",
                    m * m,
                    flat.len()
                )));
            }
            mats.push(DMatrix::from_row_iterator(m, m, flat.iter().map(|p| C64::new(p[0], p[1]))));
        }
        let mut spec = SystemSpec::new(m, mats);
        spec.l1 = self.l1;
        spec.lambda1 = self.lambda1;
        spec.rho1 = self.rho1;
        for t in self.terms {
            let need = m * (t.poly.x_degree + 1) * (t.poly.eps_degree + 1);
            if t.poly.coeffs.len() != need {
                return Err(Error::InvalidInput(format!(
                    "term {:?}: expected {need} coefficients, got {}",
                    t.l,
                    t.poly.coeffs.len()
                )));
            }
            let poly = VecPoly {
                dim: m,
                x_deg: t.poly.x_degree,
                eps_deg: t.poly.eps_degree,
                coeffs: t.poly.coeffs.iter().map(|p| C64::new(p[0], p[1])).collect(),
            };
            spec.add_term(t.kind, MultiIndex(t.l), poly)?;
        }
        if !spec.m_coeffs.iter().flat_map(|mm| mm.iter()).all(|z| is_finite(*z)) {
            return Err(Error::InvalidInput("non-finite M entry".into()));
        }
        spec.validate()?;
        Ok(spec)
    }

    fn from_spec(spec: &SystemSpec) -> Self {
        let pair = |z: &C64| [z.re, z.im];
        let mut terms = Vec::new();
        for (kind, map) in [
            (TermKind::M, &spec.m_terms),
            (TermKind::A, &spec.a_terms),
            (TermKind::G, &spec.g_terms),
        ] {
            for (l, p) in map {
                terms.push(TermJson {
                    l: l.0.clone(),
                    kind,
                    poly: PolyJson {
                        eps_degree: p.eps_deg,
                        x_degree: p.x_deg,
                        coeffs: p.coeffs.iter().map(pair).collect(),
                    },
                });
            }
        }
        SystemSpecJson {
            m: spec.dim,
            m_mats: spec
                .m_coeffs
                .iter()
                .map(|mm| {
                    (0..spec.dim)
                        .flat_map(|i| (0..spec.dim).map(move |j| (i, j)))
                        .map(|(i, j)| pair(&mm[(i, j)]))
                        .collect()
                })
                .collect(),
            terms,
            l1: spec.l1,
            lambda1: spec.lambda1,
            rho1: spec.rho1,
        }
    }
}

/// Scalar bivariate series Σ_{k+j≤N} c_{kj} x^k ε^j.
#[derive(Clone, Debug)]
struct Bi {
    n: usize,
    data: Vec<C64>,
}

fn tri_index(k: usize, j: usize) -> usize {
    let d = k + j;
    d * (d + 1) / 2 + j
}

impl Bi {
    fn zero(n: usize) -> Self {
        Bi { n, data: vec![ZERO; (n + 1) * (n + 2) / 2] }
    }
    fn one(n: usize) -> Self {
        let mut b = Bi::zero(n);
        b.data[0] = C64::new(1.0, 0.0);
        b
    }
    fn get(&self, k: usize, j: usize) -> C64 {
        if k + j > self.n {
            ZERO
        } else {
            self.data[tri_index(k, j)]
        }
    }
    fn add_at(&mut self, k: usize, j: usize, v: C64) {
        if k + j <= self.n {
            self.data[tri_index(k, j)] += v;
        }
    }
    fn mul(&self, o: &Bi) -> Bi {
        let n = self.n;
        let mut out = Bi::zero(n);
        for d1 in 0..=n {
            for j1 in 0..=d1 {
                let a = self.data[tri_index(d1 - j1, j1)];
                if a == ZERO {
                    continue;
                }
                for d2 in 0..=(n - d1) {
                    for j2 in 0..=d2 {
                        let b = o.data[tri_index(d2 - j2, j2)];
                        if b != ZERO {
                            out.add_at(d1 - j1 + d2 - j2, j1 + j2, a * b);
                        }
                    }
                }
            }
        }
        out
    }
    /// Multiplication by x^px ε^pe, truncated.
    fn shift(&self, px: usize, pe: usize) -> Bi {
        let mut out = Bi::zero(self.n);
        for d in 0..=self.n {
            for j in 0..=d {
                out.add_at(d - j + px, j + pe, self.data[tri_index(d - j, j)]);
            }
        }
        out
    }
    fn add(&mut self, o: &Bi) {
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += b;
        }
    }
}

/// Coefficients y_{kj} ∈ ℂ^m of ŷ = (x²−ε)·Σ_{k+j≤N} y_{kj} x^k ε^j.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries2 {
    dim: usize,
    order: usize,
    coeffs: Vec<Vec<C64>>,
}

impl PowerSeries2 {
    pub fn zero(dim: usize, order: usize) -> Self {
        PowerSeries2 { dim, order, coeffs: vec![vec![ZERO; dim]; (order + 1) * (order + 2) / 2] }
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn get(&self, k: usize, j: usize) -> &[C64] {
        &self.coeffs[tri_index(k, j)]
    }
    fn set(&mut self, k: usize, j: usize, v: Vec<C64>) {
        self.coeffs[tri_index(k, j)] = v;
    }
    /// The ε⁰ layer as a one-variable series of ŷ(x,0) = x²·Σ y_{k0}x^k for one component.
    pub fn eps0_series(&self, component: usize) -> PowerSeries1 {
        let mut c = vec![ZERO; self.order + 3];
        for k in 0..=self.order {
            c[k + 2] = self.get(k, 0)[component];
        }
        PowerSeries1 { coeffs: c }
    }
}

/// (x²−ε)·Σ_{k+j≤N} y_{kj} x^k ε^j.
pub fn eval_truncated(s: &PowerSeries2, x: C64, eps: C64) -> Vec<C64> {
    let mut acc = vec![ZERO; s.dim];
    for d in 0..=s.order {
        for j in 0..=d {
            let w = x.powu((d - j) as u32) * eps.powu(j as u32);
            for (a, v) in acc.iter_mut().zip(s.get(d - j, j)) {
                *a += v * w;
            }
        }
    }
    let q = x * x - eps;
    acc.iter().map(|a| a * q).collect()
}

fn poly_to_bi(p: &VecPoly, i: usize, n: usize) -> Bi {
    let mut b = Bi::zero(n);
    for q in 0..=p.eps_deg {
        for k in 0..=p.x_deg {
            b.add_at(k, q, p.coeff(k, q, i));
        }
    }
    b
}

/// Bivariate expansion of F(Y) = Σ m_l q^{|l|−1}Y^l + xΣ a_l q^{|l|−1}Y^l + Σ g_l q^{|l|}Y^l,
/// q = x²−ε, in which each equation component is divided by q once.
fn reduced_nonlinearity(spec: &SystemSpec, y: &[Bi], n: usize) -> Vec<Bi> {
    let q = {
        let mut b = Bi::zero(n);
        b.add_at(2, 0, C64::new(1.0, 0.0));
        b.add_at(0, 1, C64::new(-1.0, 0.0));
        b
    };
    let mut qpow = vec![Bi::one(n)];
    let ypow = |l: &MultiIndex| -> Bi {
        let mut acc = Bi::one(n);
        for (i, &e) in l.0.iter().enumerate() {
            for _ in 0..e {
                acc = acc.mul(&y[i]);
            }
        }
        acc
    };
    let mut qp = |k: usize| -> Bi {
        while qpow.len() <= k {
            let next = qpow.last().unwrap().mul(&q);
            qpow.push(next);
        }
        qpow[k].clone()
    };
    let mut out = vec![Bi::zero(n); spec.dim];
    for (kind, map) in [(0, &spec.m_terms), (1, &spec.a_terms), (2, &spec.g_terms)] {
        for (l, poly) in map {
            let ord = l.order() as usize;
            let base = ypow(l);
            let factor = match kind {
                0 => qp(ord - 1),
                1 => qp(ord - 1).shift(1, 0),
                _ => qp(ord),
            };
            let prod = base.mul(&factor);
            for (i, o) in out.iter_mut().enumerate() {
                let pc = poly_to_bi(poly, i, n);
                if pc.data.iter().any(|z| *z != ZERO) {
                    o.add(&prod.mul(&pc));
                }
            }
        }
    }
    out
}

/// Recursive computation of all y_{kj} with k+j ≤ N, in the order
/// (k′,j′) < (k,j) iff k′+j′ < k+j, or equal sums and j′ < j.
pub fn formal_solution(spec: &SystemSpec, order: usize) -> Result<PowerSeries2> {
    spec.validate()?;
    let m = spec.dim;
    let n = order;
    let m0 = &spec.m_coeffs[0];
    let mut ys: Vec<Bi> = vec![Bi::zero(n); m];
    let mut out = PowerSeries2::zero(m, n);
    for d in 0..=n {
        for j in 0..=d {
            let k = d - j;
            let f = reduced_nonlinearity(spec, &ys, n);
            let mut rhs = vec![ZERO; m];
            for i in 0..m {
                // derivative side: (k+1)(y_{k−1,j} − y_{k+1,j−1})
                let mut v = ZERO;
                if k >= 1 {
                    v += ys[i].get(k - 1, j) * (k + 1) as f64;
                }
                if j >= 1 {
                    v -= ys[i].get(k + 1, j - 1) * (k + 1) as f64;
                }
                for (p, mp) in spec.m_coeffs.iter().enumerate().skip(1) {
                    if p <= j {
                        for jj in 0..m {
                            v -= mp[(i, jj)] * ys[jj].get(k, j - p);
                        }
                    }
                }
                v -= f[i].get(k, j);
                rhs[i] = v;
            }
            let y = solve(m0, &rhs)?;
            for i in 0..m {
                ys[i].add_at(k, j, y[i]);
            }
            out.set(k, j, y);
        }
    }
    Ok(out)
}

/// Which singular point a local expansion is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierSide {
    /// Expansion at x = √ε in powers of (x−√ε)/(x+√ε).
    R,
    /// Expansion at x = −√ε in powers of (x+√ε)/(x−√ε).
    L,
}

/// a_0..a_N with f = Σ a_n w^n, from the Taylor data of f at ±√ε.
pub fn mobius_fourier_coeffs(
    taylor: &PowerSeries1,
    s: C64,
    side: FourierSide,
    n: usize,
) -> Result<Vec<C64>> {
    if s == ZERO {
        return Err(Error::FourierNeedsEps);
    }
    if taylor.trunc_order() < n {
        return Err(Error::InvalidInput("Taylor data shorter than requested order".into()));
    }
    // x ∓ √ε = ±2√ε·w/(1−w) on the respective side
    let scale = match side {
        FourierSide::R => 2.0 * s,
        FourierSide::L => -2.0 * s,
    };
    let c = taylor.coeffs();
    let mut a = vec![ZERO; n + 1];
    a[0] = c[0];
    for (k, ak) in a.iter_mut().enumerate().skip(1) {
        let mut pw = C64::new(1.0, 0.0);
        for (p, cp) in c.iter().enumerate().take(k + 1).skip(1) {
            pw *= scale;
            *ak += cp * pw * binomial(k - 1, p - 1);
        }
    }
    Ok(a)
}
