use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// A config field failed validation; `path` names it, as in `distribution.p[3]`.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Learner(#[from] replicable::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
