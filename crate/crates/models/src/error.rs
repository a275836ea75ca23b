use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("numerical failure in {context} at batch index {index}: {detail}")]
    Numerical {
        context: &'static str,
        index: usize,
        detail: String,
    },
    #[error("batch mixes instance sizes {expected} and {found}")]
    MixedSizes { expected: usize, found: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(#[from] cogs_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks that a batch is nonempty with one instance size; returns it.
pub(crate) fn common_size(batch: &[cogs_core::TspInstance]) -> Result<usize> {
    let first = batch.first().ok_or(Error::EmptyBatch)?.n();
    for inst in batch {
        if inst.n() != first {
            return Err(Error::MixedSizes {
                expected: first,
                found: inst.n(),
            });
        }
    }
    Ok(first)
}
