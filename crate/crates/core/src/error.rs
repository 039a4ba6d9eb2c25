use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is not defined for this input (e.g. a circuit with mid-circuit
    /// measurement has no single unitary).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The requested object is too large for the dense representation.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),

    /// An internal consistency check failed. Indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
