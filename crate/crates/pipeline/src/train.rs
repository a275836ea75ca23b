use cogs_autodiff::Adam;
use cogs_core::dataset::InstanceDataset;
use cogs_core::oracle::OracleMethod;
use cogs_core::seed::derive_seed;
use cogs_core::TspInstance;
use cogs_models::hac::{hardness, reweight};
use cogs_models::{maybe_update_baseline, reinforce_loss, Checkpoint, RolloutBaseline, SolverPolicy, Surrogate, SurrogateChoice, VaeModel};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::data::{make_training_data, DataSources, HacContext};
use crate::error::{Error, Result};
use crate::eval::{GapReport, OracleTable};
use crate::mode::TrainingMode;
use crate::rundir::{LogRow, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Warmup,
    Train,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Warmup => "warmup",
            Phase::Train => "train",
        }
    }
}

/// One structured log row per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub phase: Phase,
    pub mode: TrainingMode,
    pub seed: u64,
    pub epoch: usize,
    /// Mean sampled tour cost over the epoch.
    pub train_cost: f64,
    /// Mean greedy cost of the rollout baseline on the training data.
    pub train_baseline_cost: f64,
    /// Largest per-instance weight used in any batch (1 without re-weighting).
    pub max_weight: f64,
    pub val_policy_cost: f64,
    pub val_baseline_cost: f64,
    pub baseline_replaced: bool,
    pub oracle_method: OracleMethod,
    /// Validation gaps (fractions); `None` on epochs skipped by the stride.
    pub mean_gap: Option<f64>,
    pub worst_1: Option<f64>,
    pub worst_0_5: Option<f64>,
    pub worst_0_1: Option<f64>,
    pub data_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStats {
    pub mean_cost: f64,
    pub mean_baseline_cost: f64,
    pub grad_norm: f64,
    pub max_weight: f64,
}

/// Observer hooks into the loop; every mode goes through the same calls.
pub trait TrainProbe {
    fn on_data(&mut self, _epoch: usize, _data: &InstanceDataset) {}
    fn on_batch(&mut self, _epoch: usize, _batch: usize, _stats: &BatchStats) {}
    fn on_epoch(&mut self, _log: &EpochLog) {}
}

/// A probe that ignores everything.
pub struct NoProbe;

impl TrainProbe for NoProbe {}

/// Fixed inputs of a training phase.
pub struct TrainContext<'a> {
    pub config: &'a PipelineConfig,
    pub mode: TrainingMode,
    pub phase: Phase,
    pub vae: Option<&'a VaeModel>,
    pub validation: &'a [TspInstance],
    pub validation_oracle: &'a OracleTable,
    pub run_dir: Option<&'a RunDir>,
}

impl TrainContext<'_> {
    fn label(&self) -> String {
        format!("{}-{}", self.phase.name(), self.mode)
    }

    /// Epoch data seed. Shared by all modes so they differ only in how the
    /// seed is turned into instances.
    pub fn epoch_seed(&self, epoch: usize) -> u64 {
        derive_seed(self.config.seed, &format!("{}/data", self.phase.name()), &[epoch as u64])
    }

    fn reinforce_seed(&self, epoch: usize, batch: usize) -> u64 {
        derive_seed(
            self.config.seed,
            &format!("{}/reinforce", self.phase.name()),
            &[epoch as u64, batch as u64],
        )
    }

    fn surrogate<'b>(&self, baseline: &'b RolloutBaseline, epoch: usize) -> Surrogate<'b> {
        match self.config.hac.surrogate {
            SurrogateChoice::RolloutBaseline => Surrogate::Policy(baseline.policy()),
            SurrogateChoice::LocalSearch { restarts, seed } => Surrogate::LocalSearch {
                restarts,
                seed: derive_seed(seed, "hac/epoch", &[epoch as u64]),
            },
        }
    }
}

/// The generative-sampling training loop. Each epoch: build the mode's
/// training data, run re-weighted REINFORCE updates against the rollout
/// baseline batch by batch, then compare policy and baseline on the
/// validation set and replace the baseline if the policy is strictly better.
///
/// Returns the optimizer so callers can checkpoint it. On a failure inside
/// an epoch the current policy is checkpointed (when a run directory is
/// given) before the error is returned.
pub fn cogs_train(
    policy: &mut SolverPolicy,
    baseline: &mut RolloutBaseline,
    ctx: &TrainContext<'_>,
    epochs: usize,
    probe: &mut dyn TrainProbe,
) -> Result<(Vec<EpochLog>, Adam)> {
    ctx.config.validate()?;
    if ctx.validation.len() != ctx.validation_oracle.len() {
        return Err(Error::Config("validation oracle does not match the validation set".into()));
    }
    if ctx.mode.uses_vae() && ctx.vae.is_none() {
        return Err(Error::MissingInput {
            mode: ctx.mode.name(),
            what: "trained VAE",
        });
    }
    let mut adam = Adam::new(ctx.config.optimizer, policy.params());
    let mut logs = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let log = match run_epoch(policy, baseline, &mut adam, ctx, epoch, epochs, probe) {
            Ok(log) => log,
            Err((batch, e)) => {
                if let Some(dir) = ctx.run_dir {
                    let path = dir.checkpoint_path(&format!("{}-failed-epoch{epoch}", ctx.label()));
                    Checkpoint::for_policy(policy, Some(&adam), epoch as u64, None).write_to(&path)?;
                }
                return Err(Error::Training {
                    epoch,
                    batch,
                    source: Box::new(e),
                });
            }
        };
        probe.on_epoch(&log);
        if let Some(dir) = ctx.run_dir {
            dir.append_log(&LogRow::Epoch(log.clone()))?;
            let stride = ctx.config.checkpoint_stride;
            if epoch + 1 == epochs || (stride > 0 && (epoch + 1) % stride == 0) {
                let path = dir.checkpoint_path(&format!("{}-epoch{}", ctx.label(), epoch + 1));
                Checkpoint::for_policy(policy, Some(&adam), (epoch + 1) as u64, None).write_to(&path)?;
            }
        }
        logs.push(log);
    }
    Ok((logs, adam))
}

fn run_epoch(
    policy: &mut SolverPolicy,
    baseline: &mut RolloutBaseline,
    adam: &mut Adam,
    ctx: &TrainContext<'_>,
    epoch: usize,
    epochs: usize,
    probe: &mut dyn TrainProbe,
) -> std::result::Result<EpochLog, (usize, Error)> {
    let cfg = ctx.config;
    let sources = DataSources {
        n: cfg.n,
        vae: ctx.vae,
        vae_data: &cfg.vae_data,
    };
    let data = {
        let hac_ctx = HacContext {
            model: policy,
            surrogate: ctx.surrogate(baseline, epoch),
            config: &cfg.hac,
        };
        make_training_data(ctx.mode, ctx.epoch_seed(epoch), &sources, cfg.instances_per_epoch(), Some(&hac_ctx))
            .map_err(|e| (0, e))?
    };
    probe.on_data(epoch, &data);
    let (mut cost_sum, mut base_sum, mut max_weight) = (0.0, 0.0, 1.0_f64);
    for (bi, batch) in data.instances.chunks(cfg.batch_size).enumerate() {
        let weights = if ctx.mode.uses_hac() {
            let scores = hardness(policy, &ctx.surrogate(baseline, epoch), batch).map_err(|e| (bi, e.into()))?;
            Some(reweight(&scores, cfg.hac.tau))
        } else {
            None
        };
        let mut out = reinforce_loss(policy, batch, baseline.policy(), weights.as_deref(), ctx.reinforce_seed(epoch, bi))
            .map_err(|e| (bi, e.into()))?;
        let grad_norm = adam.step(policy.params_mut(), &mut out.grads);
        if !policy.params().is_finite() {
            return Err((
                bi,
                Error::Model(cogs_models::Error::Numerical {
                    context: "optimizer step",
                    index: bi,
                    detail: "non-finite parameters".into(),
                }),
            ));
        }
        let bw = weights.as_ref().map_or(1.0, |w| w.iter().copied().fold(0.0, f64::max));
        max_weight = max_weight.max(bw);
        let stats = BatchStats {
            mean_cost: out.mean_cost,
            mean_baseline_cost: out.mean_baseline_cost,
            grad_norm,
            max_weight: bw,
        };
        probe.on_batch(epoch, bi, &stats);
        cost_sum += out.mean_cost * batch.len() as f64;
        base_sum += out.mean_baseline_cost * batch.len() as f64;
    }
    let last = data.instances.chunks(cfg.batch_size).count();
    let update = maybe_update_baseline(policy, baseline, ctx.validation).map_err(|e| (last, e.into()))?;
    let evaluate_now = (epoch + 1) % cfg.eval_stride == 0 || epoch + 1 == epochs;
    let gaps = if evaluate_now {
        let r = GapReport::from_costs(&update.policy_costs, ctx.validation_oracle, cfg.seed, Some(epoch))
            .map_err(|e| (last, e))?;
        Some(r.summary)
    } else {
        None
    };
    let total = data.len() as f64;
    Ok(EpochLog {
        phase: ctx.phase,
        mode: ctx.mode,
        seed: cfg.seed,
        epoch,
        train_cost: cost_sum / total,
        train_baseline_cost: base_sum / total,
        max_weight,
        val_policy_cost: update.policy_cost,
        val_baseline_cost: update.baseline_cost,
        baseline_replaced: update.replaced,
        oracle_method: ctx.validation_oracle.method,
        mean_gap: gaps.as_ref().map(|g| g.mean),
        worst_1: gaps.as_ref().map(|g| g.worst_1),
        worst_0_5: gaps.as_ref().map(|g| g.worst_0_5),
        worst_0_1: gaps.as_ref().map(|g| g.worst_0_1),
        data_hash: data.content_hash(),
    })
}
