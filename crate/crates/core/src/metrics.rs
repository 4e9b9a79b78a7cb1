//! Error norms against exact solutions, nodal errors, empirical orders of
//! convergence and Hamiltonian energy tracking.
//!
//! Norm conventions are cumulative: `|e|_{H1}^2 = |e|^2 + |e'|^2` and
//! `|e|_{H2}^2 = |e|_{H1}^2 + |e''|^2`. Vector-valued errors use the Euclidean
//! norm pointwise.

use crate::cpg::{CpgSolution, ExactSolution};
use crate::error::{Error, Result};
use crate::orthopoly::gauss_legendre_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2,
    H1,
    H2,
    Linf,
    DLinf,
}

impl NormKind {
    /// Highest derivative of the exact solution the norm needs.
    pub fn derivative_order(self) -> usize {
        match self {
            NormKind::L2 | NormKind::Linf => 0,
            NormKind::H1 | NormKind::DLinf => 1,
            NormKind::H2 => 2,
        }
    }
}

/// Sampling controls for the norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Gauss points per interval beyond the local degree.
    pub quad_extra: usize,
    /// Chebyshev sample points per interval for sup norms.
    pub sup_samples: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            quad_extra: 8,
            sup_samples: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub linf: f64,
    pub dlinf: f64,
    pub nodal_max_value: f64,
    pub nodal_max_deriv: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Squared `L2` norms of `e^{(d)}` for `d = 0..=max_order`.
fn squared_integrals(
    solution: &CpgSolution,
    exact: &ExactSolution,
    max_order: usize,
    opts: &NormOptions,
) -> Result<[f64; 3]> {
    exact.require(max_order)?;
    let dim = solution.dim();
    let mut num = vec![0.0; dim];
    let mut ex = vec![0.0; dim];
    let mut sums = [0.0; 3];
    for local in solution.locals() {
        let rule = gauss_legendre_rule(local.degree() + opts.quad_extra.max(1));
        let (a, b) = local.interval();
        let half = 0.5 * (b - a);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let t = a + half * (x + 1.0);
            for (d, sum) in sums.iter_mut().enumerate().take(max_order + 1) {
                local.eval_into(t, d, &mut num);
                exact.eval(t, d, &mut ex)?;
                let e = euclid(&num, &ex);
                *sum += half * w * e * e;
            }
        }
    }
    Ok(sums)
}

/// Sup norm of `e^{(d)}` sampled at Chebyshev points plus both end points of
/// every interval.
fn sampled_sup(
    solution: &CpgSolution,
    exact: &ExactSolution,
    order: usize,
    opts: &NormOptions,
) -> Result<f64> {
    exact.require(order)?;
    let dim = solution.dim();
    let mut num = vec![0.0; dim];
    let mut ex = vec![0.0; dim];
    let n = opts.sup_samples;
    let cheb: Vec<f64> = (0..n)
        .map(|j| (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * n) as f64).cos())
        .chain([-1.0, 1.0])
        .collect();
    let mut sup = 0.0f64;
    for (idx, local) in solution.locals().iter().enumerate() {
        let (a, b) = local.interval();
        for &x in &cheb {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
            if idx == 0 && x == -1.0 {
                solution.eval_into(a, order, &mut num)?;
            } else {
                local.eval_into(t, order, &mut num);
            }
            exact.eval(t, order, &mut ex)?;
            sup = sup.max(euclid(&num, &ex));
        }
    }
    Ok(sup)
}

pub fn norm_error_with(
    solution: &CpgSolution,
    exact: &ExactSolution,
    kind: NormKind,
    opts: &NormOptions,
) -> Result<f64> {
    match kind {
        NormKind::Linf => sampled_sup(solution, exact, 0, opts),
        NormKind::DLinf => sampled_sup(solution, exact, 1, opts),
        _ => {
            let order = kind.derivative_order();
            let s = squared_integrals(solution, exact, order, opts)?;
            Ok(s[..=order].iter().sum::<f64>().sqrt())
        }
    }
}

/// Error norm of `kind` between the discrete solution and `exact`.
pub fn norm_error(solution: &CpgSolution, exact: &ExactSolution, kind: NormKind) -> Result<f64> {
    norm_error_with(solution, exact, kind, &NormOptions::default())
}

/// Largest value and derivative errors over the nodes `t_1..t_N`.
pub fn nodal_errors(solution: &CpgSolution, exact: &ExactSolution) -> Result<(f64, f64)> {
    exact.require(1)?;
    let dim = solution.dim();
    let mut num = vec![0.0; dim];
    let mut ex = vec![0.0; dim];
    let mut worst = (0.0f64, 0.0f64);
    for &t in &solution.mesh().nodes()[1..] {
        solution.eval_into(t, 0, &mut num)?;
        exact.eval(t, 0, &mut ex)?;
        worst.0 = worst.0.max(euclid(&num, &ex));
        solution.eval_into(t, 1, &mut num)?;
        exact.eval(t, 1, &mut ex)?;
        worst.1 = worst.1.max(euclid(&num, &ex));
    }
    Ok(worst)
}

/// All norms plus nodal errors in one pass over the solution.
pub fn error_report(solution: &CpgSolution, exact: &ExactSolution) -> Result<ErrorReport> {
    error_report_with(solution, exact, &NormOptions::default())
}

pub fn error_report_with(
    solution: &CpgSolution,
    exact: &ExactSolution,
    opts: &NormOptions,
) -> Result<ErrorReport> {
    let s = squared_integrals(solution, exact, 2, opts)?;
    let (nodal_max_value, nodal_max_deriv) = nodal_errors(solution, exact)?;
    Ok(ErrorReport {
        l2: s[0].sqrt(),
        h1: (s[0] + s[1]).sqrt(),
        h2: (s[0] + s[1] + s[2]).sqrt(),
        linf: sampled_sup(solution, exact, 0, opts)?,
        dlinf: sampled_sup(solution, exact, 1, opts)?,
        nodal_max_value,
        nodal_max_deriv,
    })
}

/// Empirical orders `log(e_{i-1}/e_i) / log(k_{i-1}/k_i)`; `None` where the
/// order is undefined (non-positive or non-finite entries, equal steps).
pub fn eoc(errors: &[f64], steps: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != steps.len() || errors.len() < 2 {
        return Err(Error::Validation(format!(
            "eoc needs two equally long lists of length >= 2, got {} and {}",
            errors.len(),
            steps.len()
        )));
    }
    Ok(errors
        .windows(2)
        .zip(steps.windows(2))
        .map(|(e, k)| {
            let valid = |x: f64| x > 0.0 && x.is_finite();
            if !(valid(e[0]) && valid(e[1]) && valid(k[0]) && valid(k[1])) || k[0] == k[1] {
                return None;
            }
            Some((e[0] / e[1]).ln() / (k[0] / k[1]).ln())
        })
        .collect())
}

/// Two-body Hamiltonian `(p1^2 + p2^2)/2 - 1/|q|`.
pub fn hamiltonian_energy(q: [f64; 2], p: [f64; 2]) -> Result<f64> {
    let r2 = q[0] * q[0] + q[1] * q[1];
    if r2 == 0.0 {
        return Err(Error::Singularity(
            "Hamiltonian is singular at the origin".into(),
        ));
    }
    Ok(0.5 * (p[0] * p[0] + p[1] * p[1]) - 1.0 / r2.sqrt())
}

/// Energies `H^N(t_n)` and errors `|H^N(t_n) - H(0)|` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub errors: Vec<f64>,
}

impl EnergySeries {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Energy series of a planar two-body solution (positions as components).
pub fn energy_series(solution: &CpgSolution) -> Result<EnergySeries> {
    if solution.dim() != 2 {
        return Err(Error::Validation(format!(
            "energy series needs a planar two-body solution, dimension is {}",
            solution.dim()
        )));
    }
    let mut q = [0.0; 2];
    let mut p = [0.0; 2];
    let times = solution.mesh().nodes().to_vec();
    let energies = times
        .iter()
        .map(|&t| {
            solution.eval_into(t, 0, &mut q)?;
            solution.eval_into(t, 1, &mut p)?;
            hamiltonian_energy(q, p)
        })
        .collect::<Result<Vec<_>>>()?;
    let h0 = energies[0];
    let errors = energies.iter().map(|h| (h - h0).abs()).collect();
    Ok(EnergySeries {
        times,
        energies,
        errors,
    })
}
