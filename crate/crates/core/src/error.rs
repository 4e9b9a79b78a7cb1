use thiserror::Error;

/// Errors produced by the time stepper and its supporting modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid degree {degree}: must be at least {min}")]
    InvalidDegree { degree: usize, min: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("step {interval} failed to converge after {iterations} iterations (last change {residual:.3e})")]
    StepFailure {
        interval: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("right-hand side evaluation failed on interval {interval}: {message}")]
    Rhs { interval: usize, message: String },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
