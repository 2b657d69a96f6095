use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ksvd::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Core(e) if !e.is_config_error() => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }
}
