use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge (achieved error {achieved:e}): {context}")]
    Quadrature { context: String, achieved: f64 },

    #[error("Newton iteration did not converge after {steps} steps (last iterate {last})")]
    NoConvergence { steps: usize, last: f64 },

    #[error("evaluator cannot supply rho_{required} (max order {available})")]
    InsufficientDepth { required: usize, available: usize },

    #[error("activity denominator {value} is not positive within uncertainty {uncertainty}")]
    NonPositiveDenominator { value: f64, uncertainty: f64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
