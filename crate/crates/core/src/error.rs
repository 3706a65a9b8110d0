use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("derived exponent {name} = {value} is outside (1, inf)")]
    NonPositiveExponent { name: &'static str, value: f64 },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { tol: f64, estimate: f64, error: f64 },

    #[error("bad grid: {0}")]
    BadGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("image vanished; cannot normalize")]
    ZeroImage,

    #[error("hypothesis not satisfied: {0}")]
    HypothesisNotSatisfied(String),

    #[error("insufficient support: {0}")]
    InsufficientSupport(String),

    #[error("solver did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        report: Box<crate::solver::SolveReport>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
