use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI exit class.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Bad input: mismatched sizes, out-of-range indices, violated preconditions.
    #[error("usage error: {0}")]
    Usage(String),
    /// Evaluation outside the domain of a function (pole, hyperplane, chart boundary).
    #[error("domain error: {0}")]
    Domain(String),
    /// A normal-form reduction could not be carried out.
    #[error("reduction error: {0}")]
    Reduction(String),
    /// Random instance generation ran out of retries.
    #[error("generation error: {0}")]
    Generation(String),
    /// Floating-point iteration failed to converge or hit a rank anomaly.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
