//! Training modes, the generative-sampling training loop, gap evaluation
//! with tail statistics, cross-seed aggregation and the run directory.

pub mod aggregate;
pub mod config;
pub mod data;
mod error;
pub mod eval;
pub mod experiment;
pub mod mode;
pub mod rundir;
pub mod train;

pub use aggregate::{aggregate_runs, EvalRecord, RunSummary};
pub use config::PipelineConfig;
pub use data::{make_training_data, DataSources, HacContext};
pub use error::{Error, Result};
pub use eval::{evaluate, GapReport, GapSummary, OracleTable};
pub use mode::TrainingMode;
pub use rundir::{LogRow, RunDir};
pub use train::{cogs_train, EpochLog, NoProbe, Phase, TrainContext, TrainProbe};
