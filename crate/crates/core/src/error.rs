use thiserror::Error;

/// Errors surfaced by every layer of the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} needs {needed} entries, cap is {cap}")]
    Capacity { what: String, needed: usize, cap: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("validation failed ({invariant}): {detail}")]
    Validation { invariant: String, detail: String },
    #[error("parse error at line {line}, field `{field}`: {msg}")]
    Parse { line: usize, field: String, msg: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(invariant: &str, detail: impl Into<String>) -> Self {
        Error::Validation { invariant: invariant.to_string(), detail: detail.into() }
    }

    /// True for errors that come from numerics or resource limits rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Capacity { .. } | Error::Solver(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
