use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Right-hand side `f(t, u, u')` of `u'' = f(t, u, u')`, written into the
/// output slice. Errors are reported as messages and surface as step failures.
pub type RhsFn =
    dyn Fn(f64, &[f64], &[f64], &mut [f64]) -> std::result::Result<(), String> + Send + Sync;

/// Exact solution `d^k u / dt^k (t)` written into the output slice.
pub type ExactFn = dyn Fn(f64, usize, &mut [f64]) + Send + Sync;

/// Exact solution together with the highest derivative order it provides.
#[derive(Clone)]
pub struct ExactSolution {
    max_deriv: usize,
    eval: Arc<ExactFn>,
}

impl ExactSolution {
    pub fn new<F>(max_deriv: usize, eval: F) -> Self
    where
        F: Fn(f64, usize, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            max_deriv,
            eval: Arc::new(eval),
        }
    }

    pub fn max_deriv(&self) -> usize {
        self.max_deriv
    }

    pub fn require(&self, order: usize) -> Result<()> {
        if order > self.max_deriv {
            return Err(Error::Capability(format!(
                "exact solution provides derivatives up to order {}, order {order} requested",
                self.max_deriv
            )));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, deriv: usize, out: &mut [f64]) -> Result<()> {
        self.require(deriv)?;
        (self.eval)(t, deriv, out);
        Ok(())
    }
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("max_deriv", &self.max_deriv)
            .finish_non_exhaustive()
    }
}

/// A symmetric linear operator `K = V diag(lambda) V^{-1}` with real spectrum.
pub trait ModalStiffness: Send + Sync {
    fn eigenvalues(&self) -> &[f64];
    /// `out = V^{-1} x`.
    fn to_modal(&self, x: &[f64], out: &mut [f64]);
    /// `out = V y`.
    #[allow(clippy::wrong_self_convention)]
    fn from_modal(&self, y: &[f64], out: &mut [f64]);
}

/// Splitting `f(t, u, u') = -K u + g(t, u, u')`. The stepper treats `K`
/// exactly inside each local system and iterates on `g` only, which keeps the
/// fixed-point map contractive for stiff semi-discrete systems. The discrete
/// solution is the same as for the unsplit right-hand side.
#[derive(Clone)]
pub struct LinearSplit {
    pub stiffness: Arc<dyn ModalStiffness>,
    pub remainder: Arc<RhsFn>,
}

/// Second-order initial value problem `u'' = f(t, u, u')`, `u(t_0) = u0`,
/// `u'(t_0) = u1`.
#[derive(Clone)]
pub struct ProblemDef {
    dim: usize,
    rhs: Arc<RhsFn>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    lipschitz: f64,
    exact: Option<ExactSolution>,
    split: Option<LinearSplit>,
}

impl ProblemDef {
    pub fn new<F>(rhs: F, u0: Vec<f64>, u1: Vec<f64>, lipschitz: f64) -> Result<Self>
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) -> std::result::Result<(), String>
            + Send
            + Sync
            + 'static,
    {
        Self::from_arc(Arc::new(rhs), u0, u1, lipschitz)
    }

    pub fn from_arc(rhs: Arc<RhsFn>, u0: Vec<f64>, u1: Vec<f64>, lipschitz: f64) -> Result<Self> {
        let dim = u0.len();
        if dim == 0 {
            return Err(Error::Validation(
                "problem dimension must be at least 1".into(),
            ));
        }
        if u1.len() != dim {
            return Err(Error::Validation(format!(
                "initial derivative has length {}, expected {dim}",
                u1.len()
            )));
        }
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(Error::Validation(format!(
                "Lipschitz estimate must be finite and non-negative, got {lipschitz}"
            )));
        }
        Ok(Self {
            dim,
            rhs,
            u0,
            u1,
            lipschitz,
            exact: None,
            split: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Attaches a linear splitting. The Lipschitz estimate then refers to the
    /// remainder `g`.
    pub fn with_split(mut self, split: LinearSplit) -> Result<Self> {
        if split.stiffness.eigenvalues().len() != self.dim {
            return Err(Error::Validation(format!(
                "stiffness has {} modes, problem dimension is {}",
                split.stiffness.eigenvalues().len(),
                self.dim
            )));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    pub fn split(&self) -> Option<&LinearSplit> {
        self.split.as_ref()
    }

    pub fn rhs(&self) -> &Arc<RhsFn> {
        &self.rhs
    }

    /// Evaluates `f(t, u, v)`.
    pub fn eval_rhs(
        &self,
        t: f64,
        u: &[f64],
        v: &[f64],
        out: &mut [f64],
    ) -> std::result::Result<(), String> {
        (self.rhs)(t, u, v, out)
    }
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("dim", &self.dim)
            .field("u0", &self.u0)
            .field("u1", &self.u1)
            .field("lipschitz", &self.lipschitz)
            .field("exact", &self.exact)
            .field("split", &self.split.is_some())
            .finish()
    }
}
