use thiserror::Error;

/// Errors raised by the model constructors and the numerical evaluators.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("quadrature exceeded its budget of {max_evals} evaluations (value {value:e}, error {error:e})")]
    MaxEvals {
        max_evals: usize,
        value: f64,
        error: f64,
    },

    #[error("quadrature stalled: panels cannot be refined further (error {error:e}, tolerance {tolerance:e})")]
    Stalled { error: f64, tolerance: f64 },

    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),

    #[error("invalid quadrature setup: {0}")]
    QuadratureSetup(String),

    #[error("finite difference step underflow at x = {0}")]
    StepUnderflow(f64),

    #[error("Fabry-Perot denominator vanishes (|1 - r1 r2 exp(-4pw)| = {0:e})")]
    Divergence(f64),

    #[error("singular matrix in {what} (condition number {condition:e})")]
    Singular { what: &'static str, condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
