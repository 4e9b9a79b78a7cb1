//! Runs the (degree, step) cells of an experiment.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use hpcpg::cpg::solve;
use hpcpg::mesh::TimeMesh;
use hpcpg::metrics::{energy_series, eoc, error_report, EnergySeries};
use hpcpg::wavepde::{pde_error_report, semi_discretize, FieldSolution};

use crate::config::{intervals, ConfigError, ExperimentConfig, Mode, Step};
use crate::registry::{build, Case, ExampleId};

/// Error columns of a cell; for the wave examples the norms are the
/// space-time ones and nodal errors are `L2` in space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Errors {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub linf: f64,
    /// Sup norm of the derivative error; `NaN` where not measured.
    pub dlinf: f64,
    pub nodal_val: f64,
    pub nodal_deriv: f64,
}

impl Errors {
    pub const COLUMNS: [&'static str; 7] = [
        "l2",
        "h1",
        "h2",
        "linf",
        "dlinf",
        "nodal_val",
        "nodal_deriv",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.l2,
            self.h1,
            self.h2,
            self.linf,
            self.dlinf,
            self.nodal_val,
            self.nodal_deriv,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub r: usize,
    pub k: f64,
    pub step: String,
    pub intervals: usize,
    /// `(r + 1) N` coefficients.
    pub dofs_full: usize,
    /// `(r - 1) N` coefficients left after the initial data.
    pub dofs_free: usize,
    pub errors: Option<Errors>,
    /// Orders against the previous cell of the same degree.
    pub eoc: [Option<f64>; 7],
    /// `max_n |H(t_n) - H(0)|` for the two-body example.
    pub energy_max: Option<f64>,
    pub energy_eoc: Option<f64>,
    pub iters_max: usize,
    pub iters_total: usize,
    /// Largest value and derivative jumps at interior nodes.
    pub continuity: (f64, f64),
    pub wall_ms: f64,
    pub failure: Option<String>,
    #[serde(skip)]
    pub energy: Option<EnergySeries>,
}

impl CellResult {
    fn failed(r: usize, step: &Step, n: usize, message: String, wall_ms: f64) -> Self {
        Self {
            r,
            k: step.value,
            step: step.to_string(),
            intervals: n,
            dofs_full: (r + 1) * n,
            dofs_free: (r - 1) * n,
            errors: None,
            eoc: [None; 7],
            energy_max: None,
            energy_eoc: None,
            iters_max: 0,
            iters_total: 0,
            continuity: (f64::NAN, f64::NAN),
            wall_ms,
            failure: Some(message),
            energy: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub example: ExampleId,
    pub mode: Mode,
    pub horizon: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub quad_points: usize,
    pub lipschitz: f64,
    pub spatial_note: Option<String>,
    pub cells: Vec<CellResult>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.failure.is_some()).count()
    }

    /// Cells of degree `r` in run order.
    pub fn block(&self, r: usize) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| c.r == r).collect()
    }
}

fn run_cell(cfg: &ExperimentConfig, case: &Case, r: usize, step: &Step) -> CellResult {
    let start = Instant::now();
    let horizon = cfg.horizon();
    let n = intervals(horizon, step.value).unwrap_or(0);
    let elapsed = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    let outcome = (|| -> hpcpg::Result<CellResult> {
        let mesh = TimeMesh::uniform(horizon, n, r)?;
        let opts = cfg.solver.options();
        let (solution, errors) = match case {
            Case::Ode { problem, exact } => {
                let s = solve(problem, &mesh, opts)?;
                let errors = match exact {
                    Some(ex) => {
                        let e = error_report(&s, ex)?;
                        Some(Errors {
                            l2: e.l2,
                            h1: e.h1,
                            h2: e.h2,
                            linf: e.linf,
                            dlinf: e.dlinf,
                            nodal_val: e.nodal_max_value,
                            nodal_deriv: e.nodal_max_deriv,
                        })
                    }
                    None => None,
                };
                (s, errors)
            }
            Case::Pde {
                pde,
                space,
                quad,
                exact,
            } => {
                let (system, problem) = semi_discretize(pde, space, quad)?;
                let s = solve(&problem, &mesh, opts)?;
                let field = FieldSolution::new(system.space().clone(), s)?;
                let e = pde_error_report(&field, exact)?;
                let errors = Errors {
                    l2: e.l2l2,
                    h1: e.h1l2,
                    h2: e.h2l2,
                    linf: e.linfl2,
                    dlinf: f64::NAN,
                    nodal_val: e.nodal_max_value,
                    nodal_deriv: e.nodal_max_deriv,
                };
                (field.solution().clone(), Some(errors))
            }
        };
        let energy = match cfg.example {
            ExampleId::TwoBody => Some(energy_series(&solution)?),
            _ => None,
        };
        Ok(CellResult {
            r,
            k: step.value,
            step: step.to_string(),
            intervals: n,
            dofs_full: (r + 1) * n,
            dofs_free: (r - 1) * n,
            errors,
            eoc: [None; 7],
            energy_max: energy.as_ref().map(EnergySeries::max_error),
            energy_eoc: None,
            iters_max: solution.max_iterations(),
            iters_total: solution.stats().iter().map(|s| s.iterations).sum(),
            continuity: solution.continuity_defect(),
            wall_ms: 0.0,
            failure: None,
            energy,
        })
    })();
    match outcome {
        Ok(mut cell) => {
            cell.wall_ms = elapsed(start);
            cell
        }
        Err(e) => {
            log::error!("cell r={r}, k={step} failed: {e}");
            CellResult::failed(r, step, n, e.to_string(), elapsed(start))
        }
    }
}

fn order(prev: Option<f64>, next: Option<f64>, k_prev: f64, k_next: f64) -> Option<f64> {
    match (prev, next) {
        (Some(a), Some(b)) => eoc(&[a, b], &[k_prev, k_next])
            .ok()?
            .first()
            .copied()
            .flatten(),
        _ => None,
    }
}

fn fill_orders(cells: &mut [CellResult]) {
    let degrees: Vec<usize> = {
        let mut d: Vec<usize> = cells.iter().map(|c| c.r).collect();
        d.dedup();
        d
    };
    for r in degrees {
        let idx: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].r == r).collect();
        for w in idx.windows(2) {
            let (p, q) = (&cells[w[0]], &cells[w[1]]);
            let mut orders = [None; 7];
            if let (Some(a), Some(b)) = (p.errors, q.errors) {
                for (j, o) in orders.iter_mut().enumerate() {
                    *o = order(Some(a.values()[j]), Some(b.values()[j]), p.k, q.k);
                }
            }
            let energy = order(p.energy_max, q.energy_max, p.k, q.k);
            cells[w[1]].eoc = orders;
            cells[w[1]].energy_eoc = energy;
        }
    }
}

/// Runs every cell (degrees outer, steps inner) in parallel and assembles the
/// report in that fixed order.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, ConfigError> {
    cfg.validate()?;
    let case = build(cfg.example, &cfg.params)?;
    let grid: Vec<(usize, Step)> = cfg
        .degrees
        .iter()
        .flat_map(|&r| cfg.steps_for(r).iter().map(move |s| (r, *s)))
        .collect();
    let mut cells: Vec<CellResult> = grid
        .par_iter()
        .map(|(r, s)| run_cell(cfg, &case, *r, s))
        .collect();
    fill_orders(&mut cells);
    Ok(Report {
        example: cfg.example,
        mode: cfg.mode,
        horizon: cfg.horizon(),
        tol: cfg.solver.tol,
        max_iters: cfg.solver.max_iters,
        quad_points: cfg.solver.quad_points,
        lipschitz: case.lipschitz(),
        spatial_note: case.spatial_note(),
        cells,
    })
}
