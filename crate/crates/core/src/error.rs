use thiserror::Error;

/// Errors raised by the estimators and their numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("scatter matrix is not positive definite (smallest pivot {pivot:.3e})")]
    SingularScatter { pivot: f64 },

    #[error("degenerate scatter: {0}")]
    DegenerateScatter(String),

    #[error("degenerate scale: {positive} of {n} distances are positive, need more than {needed:.1}")]
    DegenerateScale {
        positive: usize,
        n: usize,
        needed: f64,
    },

    #[error("root finder did not converge: {0}")]
    Convergence(String),

    #[error("starting estimator failed: {0}")]
    StartFailure(String),

    #[error("tuning constant unavailable: {0}")]
    Tunability(String),

    #[error("all weights are zero: {0}")]
    ZeroWeights(String),
}

pub type Result<T> = std::result::Result<T, Error>;
