use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A file did not match its expected binary or text layout.
    #[error("format error: {0}")]
    Format(String),
    /// Structurally invalid input: incompatible shapes, bad parameters, unknown names.
    #[error("validation error: {0}")]
    Validation(String),
    /// A value outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure failed (e.g. a factorization of a matrix that is not positive definite).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}
