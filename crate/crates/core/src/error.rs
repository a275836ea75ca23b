use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("not a permutation of 0..{n}: {reason}")]
    NotAPermutation { n: usize, reason: String },
    #[error("oracle cost must be positive, got {0}")]
    NonPositiveOracleCost(f64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tsplib: {0}")]
    Tsplib(String),
    #[error("unsupported EDGE_WEIGHT_TYPE `{0}` (only EUC_2D is accepted)")]
    UnsupportedFormat(String),
    #[error("source `{name}` has {dimension} nodes, at least {required} required")]
    SourceTooSmall {
        name: String,
        dimension: usize,
        required: usize,
    },
    #[error("no eligible TSPLib sources")]
    EmptyPool,
    #[error("{method} supports at most {limit} nodes, got {n}")]
    SizeLimit {
        method: &'static str,
        limit: usize,
        n: usize,
    },
    #[error("malformed tour file: {0}")]
    MalformedTour(String),
    #[error("external solver failed: {0}")]
    ExternalSolver(String),
    #[error("dataset file: {0}")]
    Dataset(String),
    #[error("statistics: {0}")]
    Stats(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
