use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mode {mode} needs a {what}")]
    MissingInput { mode: &'static str, what: &'static str },
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Training {
        epoch: usize,
        batch: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("oracle failed on instance {index} ({provenance}): {source}")]
    Oracle {
        index: usize,
        provenance: String,
        #[source]
        source: cogs_core::Error,
    },
    #[error("run directory: {0}")]
    RunDir(String),
    #[error(transparent)]
    Model(#[from] cogs_models::Error),
    #[error(transparent)]
    Core(#[from] cogs_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by bad inputs rather than the computation.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::MissingInput { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
