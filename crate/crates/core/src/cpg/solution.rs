use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::TimeMesh;
use crate::orthopoly::legendre_table;

/// Degree-`r` polynomial on one interval, stored as shifted Legendre
/// coefficients: row `l` of `coeffs` multiplies `L_l((2t - a - b)/(b - a))`,
/// column `m` is component `m`.
///
/// Solutions produced by the stepper also keep the split
/// `U(t) = v + (t - a) d + W(t)` with `W(a) = W'(a) = 0`; evaluating through
/// the small correction `W` keeps rounding errors proportional to `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    interval: (f64, f64),
    coeffs: DMatrix<f64>,
    anchor: Option<Anchor>,
}

#[derive(Debug, Clone, PartialEq)]
struct Anchor {
    value: Vec<f64>,
    deriv: Vec<f64>,
    correction: DMatrix<f64>,
}

impl LocalSolution {
    pub fn new(interval: (f64, f64), coeffs: DMatrix<f64>) -> Self {
        Self {
            interval,
            coeffs,
            anchor: None,
        }
    }

    /// Polynomial `value + (t - a) deriv + W(t)` where `correction` holds the
    /// shifted Legendre coefficients of `W`.
    pub fn anchored(
        interval: (f64, f64),
        value: &[f64],
        deriv: &[f64],
        correction: DMatrix<f64>,
    ) -> Self {
        let half = 0.5 * (interval.1 - interval.0);
        let mut coeffs = correction.clone();
        for m in 0..coeffs.ncols() {
            coeffs[(0, m)] += value[m] + half * deriv[m];
            coeffs[(1, m)] += half * deriv[m];
        }
        Self {
            interval,
            coeffs,
            anchor: Some(Anchor {
                value: value.to_vec(),
                deriv: deriv.to_vec(),
                correction,
            }),
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Writes `d^deriv U / dt^deriv (t)` into `out`. `t` is not range checked,
    /// which lets callers extrapolate to the interval end points.
    pub fn eval_into(&self, t: f64, deriv: usize, out: &mut [f64]) {
        assert!(deriv <= 2, "derivative order {deriv} not supported");
        let (a, b) = self.interval;
        let h = b - a;
        let x = (2.0 * t - a - b) / h;
        let mut table = vec![[0.0; 3]; self.coeffs.nrows()];
        legendre_table(x, &mut table);
        let scale = (2.0 / h).powi(deriv as i32);
        let series = |coeffs: &DMatrix<f64>, m: usize| {
            scale
                * coeffs
                    .column(m)
                    .iter()
                    .zip(&table)
                    .map(|(c, l)| c * l[deriv])
                    .sum::<f64>()
        };
        match &self.anchor {
            None => {
                for (m, o) in out.iter_mut().enumerate() {
                    *o = series(&self.coeffs, m);
                }
            }
            Some(anchor) => {
                for (m, o) in out.iter_mut().enumerate() {
                    let w = series(&anchor.correction, m);
                    *o = match deriv {
                        0 => anchor.value[m] + (t - a) * anchor.deriv[m] + w,
                        1 => anchor.deriv[m] + w,
                        _ => w,
                    };
                }
            }
        }
    }

    pub fn eval(&self, t: f64, deriv: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, deriv, &mut out);
        out
    }
}

/// Iteration statistics of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    /// Sup-norm change of the coefficients in the last iteration.
    pub final_change: f64,
    /// Sup-norm change after every iteration.
    pub changes: Vec<f64>,
    /// Whether the sufficient contraction bound held on this interval.
    pub contraction_ok: bool,
}

/// Globally C1 piecewise polynomial on a [`TimeMesh`].
#[derive(Debug, Clone)]
pub struct CpgSolution {
    mesh: TimeMesh,
    locals: Vec<LocalSolution>,
    stats: Vec<StepStats>,
    u0: Vec<f64>,
    u1: Vec<f64>,
}

impl CpgSolution {
    pub fn new(
        mesh: TimeMesh,
        locals: Vec<LocalSolution>,
        stats: Vec<StepStats>,
        u0: Vec<f64>,
        u1: Vec<f64>,
    ) -> Result<Self> {
        if locals.len() != mesh.len() {
            return Err(Error::Validation(format!(
                "{} local solutions for {} intervals",
                locals.len(),
                mesh.len()
            )));
        }
        let dim = u0.len();
        if u1.len() != dim || locals.iter().any(|l| l.dim() != dim) {
            return Err(Error::Validation("inconsistent solution dimensions".into()));
        }
        Ok(Self {
            mesh,
            locals,
            stats,
            u0,
            u1,
        })
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn locals(&self) -> &[LocalSolution] {
        &self.locals
    }

    pub fn stats(&self) -> &[StepStats] {
        &self.stats
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    /// Largest iteration count over all steps.
    pub fn max_iterations(&self) -> usize {
        self.stats.iter().map(|s| s.iterations).max().unwrap_or(0)
    }

    /// Writes `d^deriv U / dt^deriv (t)` into `out`.
    ///
    /// At `t_0` the initial data are returned verbatim for `deriv <= 1`.
    pub fn eval_into(&self, t: f64, deriv: usize, out: &mut [f64]) -> Result<()> {
        if deriv > 2 {
            return Err(Error::Domain(format!(
                "derivative order {deriv} not supported"
            )));
        }
        let n = self.mesh.locate(t).ok_or_else(|| {
            Error::Domain(format!(
                "t = {t} outside [{}, {}]",
                self.mesh.start(),
                self.mesh.end()
            ))
        })?;
        if t == self.mesh.start() && deriv < 2 {
            out.copy_from_slice(if deriv == 0 { &self.u0 } else { &self.u1 });
            return Ok(());
        }
        self.locals[n].eval_into(t, deriv, out);
        Ok(())
    }

    pub fn eval(&self, t: f64, deriv: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, deriv, &mut out)?;
        Ok(out)
    }

    /// Largest jump of value and first derivative over the interior nodes.
    pub fn continuity_defect(&self) -> (f64, f64) {
        let mut jump = (0.0f64, 0.0f64);
        for pair in self.locals.windows(2) {
            let t = pair[0].interval().1;
            for (d, slot) in [(0, &mut jump.0), (1, &mut jump.1)] {
                let left = pair[0].eval(t, d);
                let right = pair[1].eval(t, d);
                let diff = left
                    .iter()
                    .zip(&right)
                    .map(|(l, r)| (l - r).abs())
                    .fold(0.0, f64::max);
                *slot = slot.max(diff);
            }
        }
        jump
    }
}
