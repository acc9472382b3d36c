use thiserror::Error;

/// Errors produced by the models and solvers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: u64, message: String },

    #[error("solver failure at t = {time:.6e} s: {message}")]
    SolverFailure { time: f64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn solver(time: f64, msg: impl Into<String>) -> Self {
        Error::SolverFailure {
            time,
            message: msg.into(),
        }
    }

    /// Attaches extra context to a solver failure, leaving other kinds untouched.
    pub fn with_context(self, ctx: &str) -> Self {
        match self {
            Error::SolverFailure { time, message } => Error::SolverFailure {
                time,
                message: format!("{ctx}: {message}"),
            },
            other => other,
        }
    }
}
