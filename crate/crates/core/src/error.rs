use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("ingestion error: {0}")]
    Ingest(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("level {requested} out of range: hierarchy has levels 1..={depth}")]
    LevelRange { requested: usize, depth: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("session error: {0}")]
    Session(String),

    #[error("record rejected: {0}")]
    Rejected(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
