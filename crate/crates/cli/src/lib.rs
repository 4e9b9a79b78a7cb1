//! Config-driven experiment runner for the `hpcpg` time stepper: convergence
//! tables, nodal errors, p-refinement sweeps and energy traces written as CSV
//! and JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod registry;
pub mod report;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, Mode, Overrides};
pub use registry::ExampleId;
pub use report::{csv_string, write_outputs};
pub use runner::{run, CellResult, Report};
