use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),

    #[error("nothing to report: the result table is empty")]
    EmptyTable,

    #[error(transparent)]
    Core(#[from] wgs_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    /// Process exit status: 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Core(wgs_core::Error::Numerical(_) | wgs_core::Error::NotOptimal(_)) => 2,
            _ => 1,
        }
    }
}
