use thiserror::Error;

/// Errors raised by the library.
///
/// Divergence of a numerical scheme is not an error: it is recorded in
/// trajectories and estimator reports instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A coefficient or input produced a non-finite value.
    #[error("numeric error in {context}")]
    Numeric { context: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

pub type Result<T> = std::result::Result<T, SdeError>;

pub(crate) fn domain(msg: impl Into<String>) -> SdeError {
    SdeError::Domain(msg.into())
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(SdeError::DimensionMismatch { what, expected, got })
    }
}
