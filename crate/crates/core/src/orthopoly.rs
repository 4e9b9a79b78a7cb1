//! Legendre and generalized Jacobi polynomials, shifted Legendre bases on
//! arbitrary intervals, and Gauss-Legendre quadrature.
//!
//! Everything is evaluated through three-term recurrences; the negative-index
//! Jacobi families are assembled from their defining weight factor times a
//! classical Jacobi polynomial.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Fills `out[l] = [L_l(x), L_l'(x), L_l''(x)]` for `l = 0..out.len()`.
pub fn legendre_table(x: f64, out: &mut [[f64; 3]]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = [1.0, 0.0, 0.0];
    if n == 1 {
        return;
    }
    out[1] = [x, 1.0, 0.0];
    for l in 1..n - 1 {
        let lf = l as f64;
        let value = ((2.0 * lf + 1.0) * x * out[l][0] - lf * out[l - 1][0]) / (lf + 1.0);
        let d1 = out[l - 1][1] + (2.0 * lf + 1.0) * out[l][0];
        let d2 = out[l - 1][2] + (2.0 * lf + 1.0) * out[l][1];
        out[l + 1] = [value, d1, d2];
    }
}

/// `L_n^{(k)}(x)` for derivative order `k <= 2`.
pub fn legendre_eval(n: usize, x: f64, k: usize) -> f64 {
    assert!(k <= 2, "legendre_eval supports derivative orders 0..=2");
    let mut table = vec![[0.0; 3]; n + 1];
    legendre_table(x, &mut table);
    table[n][k]
}

/// Classical Jacobi polynomial `P_n^{(alpha, beta)}(x)` in the standard
/// normalization `P_n(1) = binom(n + alpha, n)`.
pub fn jacobi(alpha: f64, beta: f64, n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let ab = alpha + beta;
    let mut prev = 1.0;
    let mut cur = (alpha + 1.0) + (ab + 2.0) * (x - 1.0) / 2.0;
    for m in 2..=n {
        let mf = m as f64;
        let c = 2.0 * mf + ab;
        let a1 = 2.0 * mf * (mf + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
        let a3 = 2.0 * (mf + alpha - 1.0) * (mf + beta - 1.0) * c;
        let next = (a2 * cur - a3 * prev) / a1;
        prev = cur;
        cur = next;
    }
    cur
}

/// `k`-th derivative of `P_n^{(alpha, beta)}` via
/// `d/dx P_n^{(a,b)} = (n + a + b + 1)/2 * P_{n-1}^{(a+1,b+1)}`.
pub fn jacobi_deriv(alpha: f64, beta: f64, n: usize, x: f64, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut factor = 1.0;
    for j in 0..k {
        factor *= (n as f64 + alpha + beta + 1.0 + j as f64) / 2.0;
    }
    factor * jacobi(alpha + k as f64, beta + k as f64, n - k, x)
}

/// Negative-index Jacobi families used by the C1 projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenJacobiFamily {
    /// `J_n^{-1,-1} = (1 - x^2) P_{n-2}^{(1,1)}`, `n >= 2`.
    MinusOne,
    /// `J_n^{-2,-2} = (1 - x^2)^2 P_{n-4}^{(2,2)}`, `n >= 4`.
    MinusTwo,
}

impl GenJacobiFamily {
    pub fn min_degree(self) -> usize {
        match self {
            GenJacobiFamily::MinusOne => 2,
            GenJacobiFamily::MinusTwo => 4,
        }
    }
}

/// Evaluates `d^k/dx^k J_n^{family}(x)` for `k <= 2`.
pub fn jacobi_gen_eval(family: GenJacobiFamily, n: usize, x: f64, k: usize) -> Result<f64> {
    let min = family.min_degree();
    if n < min {
        return Err(Error::InvalidDegree { degree: n, min });
    }
    if k > 2 {
        return Err(Error::Domain(format!("derivative order {k} not supported")));
    }
    let s = 1.0 - x * x;
    // weight w = (1 - x^2)^m and its first two derivatives
    let (m, w) = match family {
        GenJacobiFamily::MinusOne => (1.0, [s, -2.0 * x, -2.0]),
        GenJacobiFamily::MinusTwo => (2.0, [s * s, -4.0 * x * s, 12.0 * x * x - 4.0]),
    };
    let deg = n - min;
    let p = |j: usize| jacobi_deriv(m, m, deg, x, j);
    let value = match k {
        0 => w[0] * p(0),
        1 => w[1] * p(0) + w[0] * p(1),
        _ => w[2] * p(0) + 2.0 * w[1] * p(1) + w[0] * p(2),
    };
    Ok(value)
}

/// Gauss-Legendre rule on `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `(-1, 1)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integral of `f` over `(a, b)` through the affine pullback.
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.integrate(|x| f(mid + half * x))
    }

    /// Nodes mapped onto `(a, b)`.
    pub fn mapped_nodes(&self, a: f64, b: f64) -> Vec<f64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().map(|&x| mid + half * x).collect()
    }
}

/// `n`-point Gauss-Legendre rule with increasing nodes, made exactly
/// symmetric about the origin.
pub fn gauss_legendre_rule(n: usize) -> QuadRule {
    let size = NonZeroUsize::new(n).expect("a quadrature rule needs at least one point");
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(size)
        .iter()
        .map(|&(x, w)| (x, w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let w = 0.5 * (weights[n - 1 - i] + weights[i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadRule { nodes, weights }
}

/// Shifted Legendre basis samples `phi_l(t) = L_{l-1}((2t - a - b)/(b - a))`
/// (stored with zero-based row `l - 1`) and optional derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSample {
    pub values: DMatrix<f64>,
    pub first: Option<DMatrix<f64>>,
    pub second: Option<DMatrix<f64>>,
}

impl BasisSample {
    /// Derivative matrix of the requested order, if it was sampled.
    pub fn derivative(&self, order: usize) -> Option<&DMatrix<f64>> {
        match order {
            0 => Some(&self.values),
            1 => self.first.as_ref(),
            2 => self.second.as_ref(),
            _ => None,
        }
    }
}

/// Samples the degree-`r` shifted Legendre basis on `(a, b)` at `points`,
/// with derivatives up to order `deriv`.
pub fn shifted_basis_sample(
    interval: (f64, f64),
    degree: usize,
    points: &[f64],
    deriv: usize,
) -> Result<BasisSample> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::Domain(format!("empty interval ({a}, {b})")));
    }
    if deriv > 2 {
        return Err(Error::Domain(format!(
            "derivative order {deriv} not supported"
        )));
    }
    let h = b - a;
    let slack = 1e-12 * h;
    let scale = 2.0 / h;
    let rows = degree + 1;
    let mut values = DMatrix::zeros(rows, points.len());
    let mut first = (deriv >= 1).then(|| DMatrix::zeros(rows, points.len()));
    let mut second = (deriv >= 2).then(|| DMatrix::zeros(rows, points.len()));
    let mut table = vec![[0.0; 3]; rows];
    for (j, &t) in points.iter().enumerate() {
        if t < a - slack || t > b + slack || !t.is_finite() {
            return Err(Error::Domain(format!("point {t} outside [{a}, {b}]")));
        }
        let x = ((2.0 * t - a - b) / h).clamp(-1.0, 1.0);
        legendre_table(x, &mut table);
        for l in 0..rows {
            values[(l, j)] = table[l][0];
            if let Some(m) = first.as_mut() {
                m[(l, j)] = scale * table[l][1];
            }
            if let Some(m) = second.as_mut() {
                m[(l, j)] = scale * scale * table[l][2];
            }
        }
    }
    Ok(BasisSample {
        values,
        first,
        second,
    })
}
