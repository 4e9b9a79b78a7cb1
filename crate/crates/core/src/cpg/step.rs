use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::problem::{ProblemDef, RhsFn};
use super::solution::{CpgSolution, LocalSolution, StepStats};
use crate::error::{Error, Result};
use crate::mesh::{contraction_check, contraction_factor, TimeMesh, MIN_DEGREE};
use crate::orthopoly::{gauss_legendre_rule, legendre_table, QuadRule};

/// Fixed-point solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative sup-norm tolerance on the coefficient change.
    pub tol: f64,
    pub max_iters: usize,
    /// Gauss points used for the load vector beyond the degree: `r + quad_extra`.
    pub quad_extra: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iters: 200,
            quad_extra: 8,
        }
    }
}

/// Local matrix `A_n` of the C1-CPG step together with its LU factors.
#[derive(Debug, Clone)]
pub struct StepMatrix {
    step: f64,
    degree: usize,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl StepMatrix {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Solves `A X = B` for every column of `b`.
    pub fn solve_in_place(&self, b: &mut DMatrix<f64>) -> Result<()> {
        if self.lu.solve_mut(b) {
            Ok(())
        } else {
            Err(Error::Internal("singular step matrix".into()))
        }
    }
}

fn sign(p: usize) -> f64 {
    if p.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Builds `A_n` for step size `k` and degree `r` from the closed-form entries.
pub fn assemble_step_matrix(k: f64, r: usize) -> Result<StepMatrix> {
    if r < MIN_DEGREE {
        return Err(Error::InvalidDegree {
            degree: r,
            min: MIN_DEGREE,
        });
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Validation(format!(
            "step size must be positive, got {k}"
        )));
    }
    let n = r + 1;
    let mut m = DMatrix::zeros(n, n);
    // one-based indices i, j as in the algebraic formulation
    for i in 1..r {
        for j in (i + 2)..=n {
            if (i + j) % 2 == 0 {
                m[(i - 1, j - 1)] = 2.0 / k * ((i + j - 1) * (j - i)) as f64;
            }
        }
    }
    for j in 1..=n {
        m[(r - 1, j - 1)] = sign(j - 1);
    }
    for j in 2..=n {
        m[(r, j - 1)] = sign(j) * ((j - 1) * j) as f64 / k;
    }
    let lu = m.clone().lu();
    if !lu.is_invertible() {
        return Err(Error::Internal(format!(
            "step matrix for k={k}, r={r} is singular"
        )));
    }
    Ok(StepMatrix {
        step: k,
        degree: r,
        matrix: m,
        lu,
    })
}

/// Reference-interval samples of the Legendre basis at quadrature nodes.
struct Samples {
    nodes: Vec<f64>,
    /// `L_l(x_q)`, `(r + 1) x nq`.
    values: DMatrix<f64>,
    /// `L_l'(x_q)` on the reference interval.
    first: DMatrix<f64>,
    /// `w_q L_i(x_q)` for the test functions `i = 0..r-2`.
    projector: DMatrix<f64>,
}

impl Samples {
    fn new(degree: usize, rule: &QuadRule) -> Self {
        let nq = rule.len();
        let mut values = DMatrix::zeros(degree + 1, nq);
        let mut first = DMatrix::zeros(degree + 1, nq);
        let mut projector = DMatrix::zeros(degree - 1, nq);
        let mut table = vec![[0.0; 3]; degree + 1];
        for (q, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            legendre_table(x, &mut table);
            for l in 0..=degree {
                values[(l, q)] = table[l][0];
                first[(l, q)] = table[l][1];
                if l + 1 < degree {
                    projector[(l, q)] = w * table[l][0];
                }
            }
        }
        Self {
            nodes: rule.nodes.clone(),
            values,
            first,
            projector,
        }
    }
}

/// Load matrix `F_n` for the iterate `coeffs` with evaluator `f`.
#[allow(clippy::too_many_arguments)]
fn load_matrix(
    f: &RhsFn,
    samples: &Samples,
    interval: (f64, f64),
    coeffs: &DMatrix<f64>,
    init_val: &[f64],
    init_deriv: &[f64],
    index: usize,
) -> Result<DMatrix<f64>> {
    let (a, b) = interval;
    let k = b - a;
    let half = 0.5 * k;
    let degree = coeffs.nrows() - 1;
    let dim = coeffs.ncols();
    // columns are the iterate and its derivative at each node
    let u = coeffs.tr_mul(&samples.values);
    let v = coeffs.tr_mul(&samples.first) * (2.0 / k);
    let mut load = DMatrix::zeros(dim, samples.nodes.len());
    for (q, &x) in samples.nodes.iter().enumerate() {
        let t = a + half * (x + 1.0);
        let mut col = load.column_mut(q);
        f(
            t,
            u.column(q).as_slice(),
            v.column(q).as_slice(),
            col.as_mut_slice(),
        )
        .map_err(|message| Error::Rhs {
            interval: index,
            message,
        })?;
    }
    if load.iter().any(|x| !x.is_finite()) {
        return Err(Error::Rhs {
            interval: index,
            message: "non-finite right-hand side value".into(),
        });
    }
    let top = (&samples.projector * load.transpose()) * half;
    let mut rhs = DMatrix::zeros(degree + 1, dim);
    rhs.rows_mut(0, degree - 1).copy_from(&top);
    for m in 0..dim {
        rhs[(degree - 1, m)] = init_val[m];
        rhs[(degree, m)] = init_deriv[m];
    }
    Ok(rhs)
}

/// Right-hand side `F_n(U)` of the local system for the iterate `iterate`,
/// integrated with `quad`. Rows `0..r-1` hold the load integrals, the last two
/// rows the handed-in value and derivative.
pub fn assemble_rhs(
    problem: &ProblemDef,
    interval: (f64, f64),
    degree: usize,
    iterate: &LocalSolution,
    init_val: &[f64],
    init_deriv: &[f64],
    quad: &QuadRule,
) -> Result<DMatrix<f64>> {
    if degree < MIN_DEGREE {
        return Err(Error::InvalidDegree {
            degree,
            min: MIN_DEGREE,
        });
    }
    if iterate.degree() != degree || iterate.dim() != problem.dim() {
        return Err(Error::Validation(
            "iterate does not match degree/dimension".into(),
        ));
    }
    let samples = Samples::new(degree, quad);
    load_matrix(
        problem.rhs().as_ref(),
        &samples,
        interval,
        iterate.coeffs(),
        init_val,
        init_deriv,
        1,
    )
}

struct Kernel {
    samples: Samples,
    /// `A_n` for unit step; other steps follow by row scaling.
    unit: StepMatrix,
}

type ModalFactors = Arc<Vec<LU<f64, Dyn, Dyn>>>;

/// Time stepper with per-degree caches of quadrature samples and
/// factorizations. One instance serves one solve.
pub struct Stepper {
    opts: SolverOptions,
    kernels: HashMap<usize, Arc<Kernel>>,
    modal: HashMap<(usize, i64), ModalFactors>,
}

/// Relative resolution of the step-size cache key (about 1e-12).
fn step_key(k: f64) -> i64 {
    (k.ln() * (1u64 << 40) as f64).round() as i64
}

impl Stepper {
    pub fn new(opts: SolverOptions) -> Self {
        Self {
            opts,
            kernels: HashMap::new(),
            modal: HashMap::new(),
        }
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    fn kernel(&mut self, degree: usize) -> Result<Arc<Kernel>> {
        if let Some(k) = self.kernels.get(&degree) {
            return Ok(k.clone());
        }
        let rule = gauss_legendre_rule(degree + self.opts.quad_extra.max(1));
        let kernel = Arc::new(Kernel {
            samples: Samples::new(degree, &rule),
            unit: assemble_step_matrix(1.0, degree)?,
        });
        self.kernels.insert(degree, kernel.clone());
        Ok(kernel)
    }

    /// Per-mode factorizations of `A(1) + lambda k^2 P(1)`, where `P` is the
    /// diagonal test/trial mass block.
    fn modal_factors(
        &mut self,
        kernel: &Kernel,
        eigenvalues: &[f64],
        k: f64,
    ) -> Result<Arc<Vec<LU<f64, Dyn, Dyn>>>> {
        let degree = kernel.unit.degree();
        let key = (degree, step_key(k));
        if let Some(f) = self.modal.get(&key) {
            return Ok(f.clone());
        }
        let factors = eigenvalues
            .iter()
            .map(|&lambda| {
                let mut m = kernel.unit.matrix().clone();
                for i in 0..degree - 1 {
                    m[(i, i)] += lambda * k * k / (2 * i + 1) as f64;
                }
                let lu = m.lu();
                if lu.is_invertible() {
                    Ok(lu)
                } else {
                    Err(Error::Internal(format!(
                        "singular modal step matrix (lambda={lambda})"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let factors = Arc::new(factors);
        self.modal.insert(key, factors.clone());
        Ok(factors)
    }

    /// Solves one local problem on `interval` (1-based `index` for diagnostics).
    pub fn step(
        &mut self,
        problem: &ProblemDef,
        index: usize,
        interval: (f64, f64),
        degree: usize,
        init_val: &[f64],
        init_deriv: &[f64],
    ) -> Result<(LocalSolution, StepStats)> {
        let (a, b) = interval;
        if !(a < b) {
            return Err(Error::Domain(format!("empty interval ({a}, {b})")));
        }
        let dim = problem.dim();
        if init_val.len() != dim || init_deriv.len() != dim {
            return Err(Error::Validation(
                "initial data do not match problem dimension".into(),
            ));
        }
        let kernel = self.kernel(degree)?;
        let k = b - a;
        let half = 0.5 * k;
        let modal = match problem.split() {
            Some(split) => Some(self.modal_factors(&kernel, split.stiffness.eigenvalues(), k)?),
            None => None,
        };
        let evaluator: &RhsFn = match problem.split() {
            Some(split) => split.remainder.as_ref(),
            None => problem.rhs().as_ref(),
        };

        // linear Taylor polynomial v0 + (t - a) d0 in the shifted basis; the
        // unknown is the correction W = U - taylor with W(a) = W'(a) = 0
        let mut taylor = DMatrix::zeros(degree + 1, dim);
        for m in 0..dim {
            taylor[(0, m)] = init_val[m] + half * init_deriv[m];
            taylor[(1, m)] = half * init_deriv[m];
        }
        let modal_taylor = match problem.split() {
            Some(split) => {
                let mut out = DMatrix::zeros(2, dim);
                let mut buf = vec![0.0; dim];
                for i in 0..2 {
                    let row: Vec<f64> = taylor.row(i).iter().copied().collect();
                    split.stiffness.to_modal(&row, &mut buf);
                    for (m, x) in buf.iter().enumerate() {
                        out[(i, m)] = *x;
                    }
                }
                Some(out)
            }
            None => None,
        };
        let mut corr = DMatrix::zeros(degree + 1, dim);
        let mut coeffs = taylor.clone();

        let opts = self.opts;
        let mut changes = Vec::new();
        let mut prev_change = f64::INFINITY;
        for iteration in 1..=opts.max_iters {
            let mut next = load_matrix(
                evaluator,
                &kernel.samples,
                interval,
                &coeffs,
                init_val,
                init_deriv,
                index,
            )?;
            // A(k) = S(k) A(1) with S = diag(1/k, .., 1/k, 1, 1/k)
            for i in 0..degree - 1 {
                next.row_mut(i).scale_mut(k);
            }
            next.row_mut(degree - 1).fill(0.0);
            next.row_mut(degree).fill(0.0);
            match (&modal, &modal_taylor) {
                (Some(factors), Some(mt)) => {
                    let split = problem.split().expect("modal factors imply a split");
                    solve_modal(split.stiffness.as_ref(), factors, mt, k, &mut next)?;
                }
                _ => kernel.unit.solve_in_place(&mut next)?,
            }
            let change = (&next - &corr).amax();
            corr = next;
            coeffs = &taylor + &corr;
            let scale = coeffs.amax();
            changes.push(change);
            if !change.is_finite() {
                break;
            }
            let converged = change <= opts.tol * (1.0 + scale)
                || change == 0.0
                || (iteration > 1
                    && change <= 64.0 * f64::EPSILON * (1.0 + scale)
                    && change >= prev_change);
            if converged {
                let stats = StepStats {
                    iterations: iteration,
                    final_change: change,
                    changes,
                    contraction_ok: contraction_factor(problem.lipschitz(), k) < 1.0,
                };
                let local = LocalSolution::anchored(interval, init_val, init_deriv, corr);
                return Ok((local, stats));
            }
            prev_change = change;
        }
        Err(Error::StepFailure {
            interval: index,
            iterations: changes.len(),
            residual: changes.last().copied().unwrap_or(f64::NAN),
        })
    }
}

/// Solves the split local system for the correction mode by mode: rows are
/// mapped to modal coordinates, the stiffness acting on the Taylor part
/// (`modal_taylor`, rows 0 and 1) moves to the right-hand side, every mode
/// uses its own factorization, and the result is mapped back.
fn solve_modal(
    stiffness: &dyn super::problem::ModalStiffness,
    factors: &[LU<f64, Dyn, Dyn>],
    modal_taylor: &DMatrix<f64>,
    k: f64,
    rhs: &mut DMatrix<f64>,
) -> Result<()> {
    let (rows, dim) = rhs.shape();
    let mut row = vec![0.0; dim];
    let mut out = vec![0.0; dim];
    let mut modal = DMatrix::zeros(rows, dim);
    for i in 0..rows {
        for (m, r) in row.iter_mut().enumerate() {
            *r = rhs[(i, m)];
        }
        stiffness.to_modal(&row, &mut out);
        for (m, o) in out.iter().enumerate() {
            modal[(i, m)] = *o;
        }
    }
    let lambdas = stiffness.eigenvalues();
    for m in 0..dim {
        for i in 0..2.min(rows - 2) {
            modal[(i, m)] -= lambdas[m] * k * k / (2 * i + 1) as f64 * modal_taylor[(i, m)];
        }
    }
    for (m, lu) in factors.iter().enumerate() {
        let mut col: DVector<f64> = modal.column(m).into_owned();
        if !lu.solve_mut(&mut col) {
            return Err(Error::Internal("singular modal step matrix".into()));
        }
        modal.set_column(m, &col);
    }
    for i in 0..rows {
        for (m, r) in row.iter_mut().enumerate() {
            *r = modal[(i, m)];
        }
        stiffness.from_modal(&row, &mut out);
        for (m, o) in out.iter().enumerate() {
            rhs[(i, m)] = *o;
        }
    }
    Ok(())
}

/// Solves a single step on `interval` with fresh caches.
pub fn solve_step(
    problem: &ProblemDef,
    interval: (f64, f64),
    degree: usize,
    init_val: &[f64],
    init_deriv: &[f64],
    opts: SolverOptions,
) -> Result<(LocalSolution, StepStats)> {
    Stepper::new(opts).step(problem, 1, interval, degree, init_val, init_deriv)
}

/// Marches the C1-CPG scheme across `mesh`.
pub fn solve(problem: &ProblemDef, mesh: &TimeMesh, opts: SolverOptions) -> Result<CpgSolution> {
    let flags = contraction_check(mesh, problem.lipschitz());
    let failing = flags.iter().filter(|ok| !**ok).count();
    if failing > 0 {
        log::warn!(
            "contraction bound fails on {failing} of {} intervals (L = {}, k_max = {}); fixed-point convergence is not guaranteed",
            flags.len(),
            problem.lipschitz(),
            mesh.max_step()
        );
    }
    let mut stepper = Stepper::new(opts);
    let mut value = problem.u0().to_vec();
    let mut deriv = problem.u1().to_vec();
    let mut locals = Vec::with_capacity(mesh.len());
    let mut stats = Vec::with_capacity(mesh.len());
    for n in 0..mesh.len() {
        let interval = mesh.interval(n);
        let (local, st) =
            stepper.step(problem, n + 1, interval, mesh.degrees()[n], &value, &deriv)?;
        local.eval_into(interval.1, 0, &mut value);
        local.eval_into(interval.1, 1, &mut deriv);
        locals.push(local);
        stats.push(st);
    }
    CpgSolution::new(
        mesh.clone(),
        locals,
        stats,
        problem.u0().to_vec(),
        problem.u1().to_vec(),
    )
}

/// Largest Galerkin residual `|int (U'' - f(t, U, U')) phi_i|` over the test
/// functions of each interval, integrated with `r + quad_extra` Gauss points.
pub fn residual_orthogonality(
    problem: &ProblemDef,
    solution: &CpgSolution,
    quad_extra: usize,
) -> Result<Vec<f64>> {
    let dim = problem.dim();
    let mut u = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut w = vec![0.0; dim];
    let mut f = vec![0.0; dim];
    solution
        .locals()
        .iter()
        .enumerate()
        .map(|(n, local)| {
            let degree = local.degree();
            let rule = gauss_legendre_rule(degree + quad_extra.max(1));
            let (a, b) = local.interval();
            let half = 0.5 * (b - a);
            let mut acc = DMatrix::<f64>::zeros(degree - 1, dim);
            let mut table = vec![[0.0; 3]; degree - 1];
            for (&x, &wq) in rule.nodes.iter().zip(&rule.weights) {
                let t = a + half * (x + 1.0);
                local.eval_into(t, 0, &mut u);
                local.eval_into(t, 1, &mut v);
                local.eval_into(t, 2, &mut w);
                problem
                    .eval_rhs(t, &u, &v, &mut f)
                    .map_err(|message| Error::Rhs {
                        interval: n + 1,
                        message,
                    })?;
                legendre_table(x, &mut table);
                for i in 0..degree - 1 {
                    for m in 0..dim {
                        acc[(i, m)] += half * wq * (w[m] - f[m]) * table[i][0];
                    }
                }
            }
            Ok(acc.amax())
        })
        .collect()
}
