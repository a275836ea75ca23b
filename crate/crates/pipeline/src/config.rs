use cogs_autodiff::AdamConfig;
use cogs_core::distributions::GeneratorKind;
use cogs_core::oracle::OracleChoice;
use cogs_models::{HacConfig, PolicyConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything a training run depends on. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n: usize,
    pub seed: u64,
    pub policy: PolicyConfig,
    pub optimizer: AdamConfig,
    pub batch_size: usize,
    pub batches_per_epoch: usize,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub validation_size: usize,
    pub eval_size: usize,
    /// Validation gap is computed every `eval_stride` epochs (and at the last).
    pub eval_stride: usize,
    pub hac: HacConfig,
    /// Distribution the `no_vae` ablation trains on (the VAE's own data).
    pub vae_data: GeneratorKind,
    pub oracle: OracleChoice,
    /// Checkpoint every this many epochs; 0 keeps only the final one.
    pub checkpoint_stride: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n: 50,
            seed: 0,
            policy: PolicyConfig::default(),
            optimizer: AdamConfig::default(),
            batch_size: 256,
            batches_per_epoch: 20,
            epochs: 50,
            warmup_epochs: 5,
            validation_size: 512,
            eval_size: 1000,
            eval_stride: 1,
            hac: HacConfig::default(),
            vae_data: GeneratorKind::default_clustered_uniform(),
            oracle: OracleChoice::default_local_search(0),
            checkpoint_stride: 0,
        }
    }
}

impl PipelineConfig {
    /// n = 20 with the width-32 policy, sized for a single CPU core.
    pub fn toy() -> Self {
        PipelineConfig {
            n: 20,
            policy: PolicyConfig::toy(),
            optimizer: AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            },
            batch_size: 128,
            batches_per_epoch: 4,
            warmup_epochs: 20,
            validation_size: 200,
            oracle: OracleChoice::LocalSearch {
                restarts: 20,
                seed: 0,
            },
            ..PipelineConfig::default()
        }
    }

    pub fn instances_per_epoch(&self) -> usize {
        self.batch_size * self.batches_per_epoch
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n < 3 {
            return bad("n must be at least 3");
        }
        if self.batch_size == 0 || self.batches_per_epoch == 0 {
            return bad("batch_size and batches_per_epoch must be positive");
        }
        if self.validation_size == 0 || self.eval_size == 0 {
            return bad("validation_size and eval_size must be positive");
        }
        if self.eval_stride == 0 {
            return bad("eval_stride must be positive");
        }
        if !(self.optimizer.lr >= 0.0) {
            return bad("learning rate must be >= 0");
        }
        self.policy.validate()?;
        self.hac.validate()?;
        Ok(())
    }
}
