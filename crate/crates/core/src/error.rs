use thiserror::Error;

/// Errors raised while constructing measures or evaluating functionals.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("mean integral does not converge: {0}")]
    NoMean(String),

    #[error("non-finite value encountered at x = {x}")]
    NonFinite { x: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error bound {error}")]
    NoConvergence { estimate: f64, error: f64 },

    #[error("quantile bracketing failed for u = {u}")]
    Bracketing { u: f64 },

    #[error("evaluation outside usable support at x = {x}")]
    OutsideSupport { x: f64 },

    #[error("kernel explosion condition fails: {0}")]
    KernelExplosion(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
