use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid numerical configuration (node counts, tolerances, restarts).
    #[error("configuration error: {0}")]
    Config(String),
    /// A physical constraint on a state family was violated.
    #[error("constraint violation: {0}")]
    Constraint(String),
    /// The requested computation exceeds an enumeration or memory cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The operation is not defined for this case.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
