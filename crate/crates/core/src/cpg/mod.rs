//! The C1-continuous Petrov-Galerkin time stepper.
//!
//! On every interval `I_n` the trial function is a degree-`r_n` polynomial
//! expanded in shifted Legendre polynomials; the test space is `P_{r_n - 2}`.
//! Rows `1..r_n-1` of the local system hold `int U'' phi_i = int f phi_i`,
//! the last two rows pin the value and derivative handed over from the
//! previous interval. The nonlinear system is solved by fixed-point iteration.

mod problem;
mod solution;
mod step;

pub use problem::{ExactFn, ExactSolution, LinearSplit, ModalStiffness, ProblemDef, RhsFn};
pub use solution::{CpgSolution, LocalSolution, StepStats};
pub use step::{
    assemble_rhs, assemble_step_matrix, residual_orthogonality, solve, solve_step, SolverOptions,
    StepMatrix, Stepper,
};
