use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema: {0}")]
    Schema(String),
    #[error("data: {0}")]
    Data(String),
    #[error("hierarchy: {0}")]
    Hierarchy(String),
    #[error("split: {0}")]
    Split(String),
    #[error("fit: {0}")]
    Fit(String),
    #[error("metric: {0}")]
    Metric(String),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error("config: {0}")]
    Config(String),
    #[error("replicate {replicate}: {source}")]
    Replicate { replicate: usize, source: Box<Error> },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn split(msg: impl Into<String>) -> Self {
        Error::Split(msg.into())
    }

    pub(crate) fn fit(msg: impl Into<String>) -> Self {
        Error::Fit(msg.into())
    }

    pub(crate) fn metric(msg: impl Into<String>) -> Self {
        Error::Metric(msg.into())
    }
}
