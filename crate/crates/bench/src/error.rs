use lowshot_core::EstimateError;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no usable pool after {attempts} reseeds (seed {seed})")]
    RegenerationLimit { seed: u64, attempts: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
