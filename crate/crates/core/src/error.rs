use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix of size {rows}x{cols} exceeds the dense oracle cap of {cap}")]
    TooLarge { rows: usize, cols: usize, cap: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(what: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            what,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// `true` for errors caused by the caller's configuration rather than
    /// by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::TooLarge { .. }
                | Error::Io(_)
                | Error::Format(_)
        )
    }
}
