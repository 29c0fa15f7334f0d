use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (group files, words, element expressions, configs).
    #[error("{line}:{column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configured cap (cosets, support size, states, subsets) was hit.
    #[error("resource exceeded: {what} (limit {limit})")]
    ResourceExceeded { what: String, limit: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid homomorphism: {0}")]
    InvalidHomomorphism(String),

    #[error("certification failed: {reason} (witness: {witness})")]
    CertificationFailed { reason: String, witness: String },

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn resource(what: impl Into<String>, limit: usize) -> Self {
        Error::ResourceExceeded {
            what: what.into(),
            limit,
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Error::InvariantViolated(message.into())
    }

    /// Process exit code used by the experiment runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidInput(_)
            | Error::NotApplicable(_)
            | Error::InvalidHomomorphism(_)
            | Error::Io(_) => 2,
            Error::ResourceExceeded { .. } => 3,
            Error::InvariantViolated(_) | Error::CertificationFailed { .. } => 4,
        }
    }

    /// Shifts a single-line parse error onto `line` of a larger file, offsetting the column.
    pub(crate) fn at_line(self, line: usize, column_offset: usize) -> Self {
        match self {
            Error::Config {
                column, message, ..
            } => Error::Config {
                line,
                column: column + column_offset,
                message,
            },
            other => other,
        }
    }
}
