//! hp-version C1-continuous Petrov-Galerkin time stepping for nonlinear
//! second-order initial value problems `u'' = f(t, u, u')`.
//!
//! The crate is organised bottom-up:
//!
//! * [`orthopoly`]: Legendre/Jacobi polynomials and Gauss-Legendre rules.
//! * [`mesh`]: time partitions with per-interval degrees.
//! * [`cpg`]: the time stepper itself.
//! * [`projection`]: the C1 projector used as an approximation oracle.
//! * [`metrics`]: error norms, convergence orders, energy tracking.
//! * [`wavepde`]: spectral-Galerkin semi-discretization of wave equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cpg;
pub mod error;
pub mod mesh;
pub mod metrics;
pub mod orthopoly;
pub mod projection;
pub mod wavepde;

pub use cpg::{solve, CpgSolution, ExactSolution, LocalSolution, ProblemDef, SolverOptions};
pub use error::{Error, Result};
pub use mesh::TimeMesh;
