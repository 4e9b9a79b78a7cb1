//! The H2-conforming projector onto degree-`r` polynomials, its scaled and
//! piecewise versions, and the L2 projection.
//!
//! `Pi u` matches `u` and `u'` at the left end point and `(u - Pi u)''` is
//! orthogonal to all polynomials of degree `r - 2`. For `r >= 3` it also
//! matches `u` and `u'` at the right end point.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::cpg::{CpgSolution, LocalSolution};
use crate::error::{Error, Result};
use crate::mesh::{TimeMesh, MIN_DEGREE};
use crate::orthopoly::{gauss_legendre_rule, jacobi, legendre_table};

/// `u^{(k)}(x)` for `k <= 2`.
pub type ScalarFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// Function to be projected on `(-1, 1)`.
#[derive(Clone)]
pub enum ProjectorInput {
    /// Callable returning `u`, `u'`, `u''`; Legendre coefficients of `u''`
    /// are computed by quadrature.
    Function(Arc<ScalarFn>),
    /// `u(-1)`, `u'(-1)` and the Legendre coefficients of `u''`. Right end
    /// point data follow from the first two coefficients.
    Expansion {
        value: f64,
        deriv: f64,
        second: Vec<f64>,
    },
}

impl ProjectorInput {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        ProjectorInput::Function(Arc::new(f))
    }

    /// `[u(-1), u(1), u'(-1), u'(1)]`.
    fn endpoints(&self) -> [f64; 4] {
        match self {
            ProjectorInput::Function(f) => [f(-1.0, 0), f(1.0, 0), f(-1.0, 1), f(1.0, 1)],
            ProjectorInput::Expansion {
                value,
                deriv,
                second,
            } => {
                let a0 = second.first().copied().unwrap_or(0.0);
                let a1 = second.get(1).copied().unwrap_or(0.0);
                // u(1) = u(-1) + 2u'(-1) + int (1 - s) u''(s) ds
                let right = value + 2.0 * deriv + 2.0 * a0 - 2.0 / 3.0 * a1;
                [*value, right, *deriv, deriv + 2.0 * a0]
            }
        }
    }

    /// Legendre coefficients `a_0..a_{n-1}` of `u''`.
    fn second_coeffs(&self, n: usize) -> Vec<f64> {
        match self {
            ProjectorInput::Function(f) => {
                let rule = gauss_legendre_rule((2 * n).max(32));
                let mut table = vec![[0.0; 3]; n];
                let mut acc = vec![0.0; n];
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    legendre_table(x, &mut table);
                    let d2 = f(x, 2);
                    for (a, l) in acc.iter_mut().zip(&table) {
                        *a += w * d2 * l[0];
                    }
                }
                acc.iter()
                    .enumerate()
                    .map(|(i, a)| a * (2 * i + 1) as f64 / 2.0)
                    .collect()
            }
            ProjectorInput::Expansion { second, .. } => (0..n)
                .map(|i| second.get(i).copied().unwrap_or(0.0))
                .collect(),
        }
    }
}

impl std::fmt::Debug for ProjectorInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectorInput::Function(_) => f.write_str("ProjectorInput::Function(..)"),
            ProjectorInput::Expansion {
                value,
                deriv,
                second,
            } => f
                .debug_struct("ProjectorInput::Expansion")
                .field("value", value)
                .field("deriv", deriv)
                .field("second", second)
                .finish(),
        }
    }
}

/// Monomial coefficients `[c0, c1, c2, c3]` of the cubic matching values and
/// derivatives at both end points of `(-1, 1)`.
pub fn hermite_cubic(u_left: f64, u_right: f64, du_left: f64, du_right: f64) -> [f64; 4] {
    // (x^3 - 3x + 2)/4, (-x^3 + 3x + 2)/4, (x^3 - x^2 - x + 1)/4, (x^3 + x^2 - x - 1)/4
    let basis = [
        [2.0, -3.0, 0.0, 1.0],
        [2.0, 3.0, 0.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
        [-1.0, -1.0, 1.0, 1.0],
    ];
    let data = [u_left, u_right, du_left, du_right];
    let mut out = [0.0; 4];
    for (b, d) in basis.iter().zip(data) {
        for (o, c) in out.iter_mut().zip(b) {
            *o += 0.25 * c * d;
        }
    }
    out
}

fn monomial(c: &[f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

/// Legendre coefficients of a polynomial of degree `<= degree` given as a
/// pointwise evaluator, by an exact Gauss rule.
fn legendre_coeffs_of(degree: usize, p: impl Fn(f64) -> f64) -> Vec<f64> {
    let rule = gauss_legendre_rule(degree + 2);
    let mut table = vec![[0.0; 3]; degree + 1];
    let mut acc = vec![0.0; degree + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        legendre_table(x, &mut table);
        let v = p(x);
        for (a, l) in acc.iter_mut().zip(&table) {
            *a += w * v * l[0];
        }
    }
    acc.iter()
        .enumerate()
        .map(|(i, a)| a * (2 * i + 1) as f64 / 2.0)
        .collect()
}

/// Degree-`r` projection of `u` on `(-1, 1)`, returned as a local solution on
/// that interval.
pub fn project_c1(u: &ProjectorInput, r: usize) -> Result<LocalSolution> {
    if r < MIN_DEGREE {
        return Err(Error::InvalidDegree {
            degree: r,
            min: MIN_DEGREE,
        });
    }
    let [ul, ur, dul, dur] = u.endpoints();
    let coeffs = if r == 2 {
        legendre_coeffs_of(2, |x| {
            ul - (x + 1.0) * (x - 3.0) / 4.0 * dul + (x + 1.0) * (x + 1.0) / 4.0 * dur
        })
    } else {
        let cubic = hermite_cubic(ul, ur, dul, dur);
        let a = u.second_coeffs(r - 1);
        let b: Vec<f64> = (4..=r)
            .map(|i| a[i - 2] / (4 * (i - 2) * (i - 3)) as f64)
            .collect();
        legendre_coeffs_of(r, |x| {
            // J_i^{-2,-2} = (1 - x^2)^2 P_{i-4}^{(2,2)}
            let bubble = (1.0 - x * x).powi(2);
            let tail: f64 = b
                .iter()
                .enumerate()
                .map(|(j, bi)| bi * bubble * jacobi(2.0, 2.0, j, x))
                .sum();
            monomial(&cubic, x) + tail
        })
    };
    Ok(LocalSolution::new(
        (-1.0, 1.0),
        DMatrix::from_column_slice(r + 1, 1, &coeffs),
    ))
}

/// Projection of `u` (given on the physical interval, derivatives in `t`)
/// onto degree-`r` polynomials on `(a, b)` through the affine pullback.
pub fn project_c1_scaled<F>(u: F, interval: (f64, f64), r: usize) -> Result<LocalSolution>
where
    F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
{
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("invalid interval ({a}, {b})")));
    }
    let half = 0.5 * (b - a);
    let input =
        ProjectorInput::from_fn(move |x, k| u(a + half * (x + 1.0), k) * half.powi(k as i32));
    let reference = project_c1(&input, r)?;
    Ok(LocalSolution::new(interval, reference.coeffs().clone()))
}

/// Piecewise projection on every interval of `mesh` with the mesh degrees.
/// The pieces join with C1 continuity when all degrees are at least 3.
pub fn project_piecewise<F>(u: F, mesh: &TimeMesh) -> Result<CpgSolution>
where
    F: Fn(f64, usize) -> f64 + Send + Sync + Clone + 'static,
{
    let locals = (0..mesh.len())
        .map(|n| project_c1_scaled(u.clone(), mesh.interval(n), mesh.degrees()[n]))
        .collect::<Result<Vec<_>>>()?;
    let t0 = mesh.start();
    CpgSolution::new(
        mesh.clone(),
        locals,
        Vec::new(),
        vec![u(t0, 0)],
        vec![u(t0, 1)],
    )
}

/// Shifted Legendre coefficients of the L2 projection of `v` onto degree-`d`
/// polynomials on `interval`.
pub fn l2_project<F>(v: F, interval: (f64, f64), d: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("invalid interval ({a}, {b})")));
    }
    let rule = gauss_legendre_rule((2 * (d + 1)).max(32));
    let half = 0.5 * (b - a);
    let mut table = vec![[0.0; 3]; d + 1];
    let mut acc = vec![0.0; d + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        legendre_table(x, &mut table);
        let val = v(a + half * (x + 1.0));
        for (c, l) in acc.iter_mut().zip(&table) {
            *c += w * val * l[0];
        }
    }
    Ok(acc
        .iter()
        .enumerate()
        .map(|(i, c)| c * (2 * i + 1) as f64 / 2.0)
        .collect())
}
