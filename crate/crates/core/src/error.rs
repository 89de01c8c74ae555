use std::path::PathBuf;

/// Errors raised anywhere in the simulation, learning and harness layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no interaction partners")]
    NoInteractionPartners,
    #[error("episode done")]
    EpisodeDone,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("checkpoint format: {0}")]
    Checkpoint(String),
    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },
    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
