//! Run directory layout:
//!
//! ```text
//! <run>/config.json      configuration snapshot (pretty JSON)
//! <run>/log.jsonl        one JSON object per line, tagged by "type"
//! <run>/checkpoints/     *.ckpt files
//! <run>/summary.json     final RunSummary
//! ```

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use cogs_core::dataset::write_atomic;
use cogs_models::vae::VaeEpochLog;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::GapSummary;
use crate::train::EpochLog;

/// One line of `log.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRow {
    Epoch(EpochLog),
    VaeEpoch(VaeLogRow),
    Eval(EvalRow),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeLogRow {
    pub seed: u64,
    #[serde(flatten)]
    pub log: VaeEpochLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub test_set: String,
    pub mode: String,
    #[serde(flatten)]
    pub summary: GapSummary,
}

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("checkpoints"))?;
        Ok(RunDir { root })
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if !root.is_dir() {
            return Err(Error::RunDir(format!("{} is not a directory", root.display())));
        }
        Ok(RunDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join("log.jsonl")
    }

    pub fn summary_path(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    pub fn checkpoint_path(&self, name: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("{name}.ckpt"))
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(write_atomic(path, &bytes)?)
    }

    pub fn read_json<T: DeserializeOwned>(&self, path: &Path) -> Result<T> {
        let bytes = fs::read(path).map_err(|e| Error::RunDir(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn append_log(&self, row: &LogRow) -> Result<()> {
        let mut line = serde_json::to_vec(row)?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(self.log_path())?;
        f.write_all(&line)?;
        Ok(())
    }

    pub fn read_log(&self) -> Result<Vec<LogRow>> {
        read_log_file(&self.log_path())
    }
}

/// Parses a `log.jsonl` file, naming the offending line on error.
pub fn read_log_file(path: &Path) -> Result<Vec<LogRow>> {
    let f = fs::File::open(path).map_err(|e| Error::RunDir(format!("{}: {e}", path.display())))?;
    parse_log(BufReader::new(f))
}

pub fn parse_log(reader: impl BufRead) -> Result<Vec<LogRow>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line).map_err(|e| Error::RunDir(format!("log line {}: {e}", i + 1)))?,
        );
    }
    Ok(rows)
}
