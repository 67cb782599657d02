use thiserror::Error;

/// Errors reported by the estimation and simulation routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested operation is defined but not supported for these
    /// parameters (e.g. frequency polygons above dimension one).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A hard resource cap was exceeded (e.g. dense factorization size).
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A numerical routine failed to converge or detected divergence.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
