//! Shared numerical kernels: Gauss–Legendre rules, complex log-Gamma,
//! a cancellation-free `expm1`, and small dense linear algebra wrappers.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::DMatrix;
use std::f64::consts::PI;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule with a fixed number of nodes per panel.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        GaussRule { nodes, weights }
    }

    /// ∫_a^b f over `panels` equal panels.
    pub fn integrate<F: FnMut(f64) -> C64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> C64 {
        let h = (b - a) / panels as f64;
        let mut total = C64::new(0.0, 0.0);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            let mut acc = C64::new(0.0, 0.0);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += f(mid + 0.5 * h * x) * *w;
            }
            total += acc * (0.5 * h);
        }
        total
    }

    /// Same as [`GaussRule::integrate`] for a vector-valued integrand of length `dim`.
    pub fn integrate_vec<F: FnMut(f64) -> Vec<C64>>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        panels: usize,
        dim: usize,
    ) -> Vec<C64> {
        let h = (b - a) / panels as f64;
        let mut total = vec![C64::new(0.0, 0.0); dim];
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let v = f(mid + 0.5 * h * x);
                for (t, vi) in total.iter_mut().zip(v) {
                    *t += vi * (*w * 0.5 * h);
                }
            }
        }
        total
    }
}

/// exp(z) − 1 without cancellation near 0.
pub fn expm1(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let mut term = z;
        let mut sum = z;
        for k in 2..40 {
            term *= z / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

/// z / (exp(z) − 1), equal to 1 at z = 0.
pub fn z_over_expm1(z: C64) -> C64 {
    if z.norm() < 1e-300 {
        C64::new(1.0, 0.0)
    } else {
        z / expm1(z)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// log sin(w), valid for large |Im w| without overflow; branch unspecified.
fn ln_sin(w: C64) -> C64 {
    if w.im >= 0.0 {
        let q = (2.0 * I * w).exp();
        -I * w + ((q - 1.0) / (2.0 * I)).ln()
    } else {
        let q = (-2.0 * I * w).exp();
        I * w + ((1.0 - q) / (2.0 * I)).ln()
    }
}

/// log Γ(z) (Lanczos, reflected for Re z < ½). The imaginary part is defined
/// only modulo 2π, which is all that exponentiated quantities need.
pub fn ln_gamma(z: C64) -> Result<C64> {
    if z.re <= 0.0 && (z.re - z.re.round()).abs() < 1e-14 && z.im.abs() < 1e-14 {
        return Err(Error::BetaPole(format!("Γ pole at {z}")));
    }
    if z.re < 0.5 {
        let s = ln_sin(PI * z);
        Ok(C64::new(PI.ln(), 0.0) - s - ln_gamma(1.0 - z)?)
    } else {
        let zm = z - 1.0;
        let mut acc = C64::new(LANCZOS[0], 0.0);
        for (k, p) in LANCZOS.iter().enumerate().skip(1) {
            acc += *p / (zm + k as f64);
        }
        let t = zm + LANCZOS_G + 0.5;
        Ok(0.5 * (2.0 * PI).ln() + (zm + 0.5) * t.ln() - t + acc.ln())
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Wrap an angle difference into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub fn smallest_singular_value(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::new(m.clone());
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::SingularMatrix("eigenvalue computation failed".into()))?;
    Ok(ev.iter().cloned().collect())
}

pub fn solve(m: &DMatrix<C64>, b: &[C64]) -> Result<Vec<C64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    m.clone()
        .lu()
        .solve(&rhs)
        .map(|v| v.iter().cloned().collect())
        .ok_or_else(|| Error::SingularMatrix("dense solve failed".into()))
}

pub fn inverse(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("matrix not invertible".into()))
}

pub fn mat_vec(m: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}
