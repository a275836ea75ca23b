//! JSON documents written by the commands besides the library's own
//! datasets, checkpoints, logs and reports.

use std::path::Path;

use cogs_core::dataset::write_atomic;
use cogs_models::pca::LatentProjection;
use cogs_pipeline::{PipelineConfig, TrainingMode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// `<run>/config.json`: everything `train-solver` ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: TrainingMode,
    pub vae: Option<String>,
    pub tests: Vec<TestSpec>,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub name: String,
    pub path: String,
}

/// Written next to a TSPLib50 dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tsplib50Manifest {
    pub dataset: String,
    pub count: usize,
    pub seed: u64,
    pub max_source_dimension: Option<usize>,
    pub sources: Vec<ManifestSource>,
    pub instances: Vec<ManifestInstance>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSource {
    pub file: String,
    pub name: String,
    pub dimension: usize,
    /// Instances drawn from this source.
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestInstance {
    pub index: usize,
    pub source: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub file: String,
    pub reason: String,
}

/// Output of `latent-pca`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPcaOutput {
    pub projection: LatentProjection,
    /// Convex-hull area per label, in label order.
    pub hull_areas: Vec<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    Ok(())
}
