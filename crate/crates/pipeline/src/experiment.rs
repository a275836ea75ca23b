//! Composition helpers shared by the command line and the acceptance tests.

use cogs_core::dataset::InstanceDataset;
use cogs_core::distributions::{GeneratorConfig, GeneratorKind};
use cogs_core::oracle::OracleChoice;
use cogs_core::seed::derive_seed;
use cogs_core::TspInstance;
use cogs_models::{RolloutBaseline, SolverPolicy, VaeModel};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::eval::{evaluate, GapReport, OracleTable};
use crate::mode::TrainingMode;
use crate::rundir::{EvalRow, LogRow, RunDir};
use crate::train::{cogs_train, EpochLog, Phase, TrainContext, TrainProbe};

/// Instances with precomputed oracle tours.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub name: String,
    pub instances: Vec<TspInstance>,
    pub oracle: OracleTable,
}

impl TestSet {
    pub fn solve(name: impl Into<String>, dataset: &InstanceDataset, choice: &OracleChoice) -> Result<Self> {
        Ok(TestSet {
            name: name.into(),
            oracle: OracleTable::solve(&dataset.instances, &dataset.provenance, choice)?,
            instances: dataset.instances.clone(),
        })
    }
}

/// Uniform validation set keyed by `derive_seed(seed, "validation", [])`.
pub fn build_validation(config: &PipelineConfig) -> Result<TestSet> {
    let gen = GeneratorConfig::new(GeneratorKind::Uniform, config.n, derive_seed(config.seed, "validation", &[]));
    let ds = InstanceDataset::generate("validation", &gen, config.validation_size)?;
    TestSet::solve("validation", &ds, &config.oracle)
}

pub fn init_policy(config: &PipelineConfig) -> Result<SolverPolicy> {
    Ok(SolverPolicy::new(config.policy, derive_seed(config.seed, "policy/init", &[]))?)
}

/// Policy and baseline after uniform warm-up training.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub policy: SolverPolicy,
    pub baseline: RolloutBaseline,
    pub logs: Vec<EpochLog>,
}

pub fn warm_up(
    config: &PipelineConfig,
    validation: &TestSet,
    run_dir: Option<&RunDir>,
    probe: &mut dyn TrainProbe,
) -> Result<WarmStart> {
    let mut policy = init_policy(config)?;
    let mut baseline = RolloutBaseline::new(&policy);
    let ctx = TrainContext {
        config,
        mode: TrainingMode::Uniform,
        phase: Phase::Warmup,
        vae: None,
        validation: &validation.instances,
        validation_oracle: &validation.oracle,
        run_dir,
    };
    let (logs, _) = cogs_train(&mut policy, &mut baseline, &ctx, config.warmup_epochs, probe)?;
    Ok(WarmStart {
        policy,
        baseline,
        logs,
    })
}

#[derive(Debug, Clone)]
pub struct ModeRun {
    pub mode: TrainingMode,
    pub policy: SolverPolicy,
    pub logs: Vec<EpochLog>,
    /// One report per test set, in the order given.
    pub reports: Vec<(String, GapReport)>,
}

/// Fine-tunes a copy of the warm start in `mode` (fresh optimizer) and
/// evaluates the result on each test set.
#[allow(clippy::too_many_arguments)]
pub fn run_mode(
    config: &PipelineConfig,
    warm: &WarmStart,
    mode: TrainingMode,
    vae: Option<&VaeModel>,
    validation: &TestSet,
    tests: &[TestSet],
    run_dir: Option<&RunDir>,
    probe: &mut dyn TrainProbe,
) -> Result<ModeRun> {
    let mut policy = warm.policy.clone();
    let mut baseline = warm.baseline.clone();
    let ctx = TrainContext {
        config,
        mode,
        phase: Phase::Train,
        vae,
        validation: &validation.instances,
        validation_oracle: &validation.oracle,
        run_dir,
    };
    let (logs, _) = cogs_train(&mut policy, &mut baseline, &ctx, config.epochs, probe)?;
    let mut reports = Vec::with_capacity(tests.len());
    for t in tests {
        let r = evaluate(&policy, &t.instances, &t.oracle, config.seed, Some(config.epochs), 3)?;
        if let Some(dir) = run_dir {
            dir.append_log(&LogRow::Eval(EvalRow {
                test_set: t.name.clone(),
                mode: mode.name().into(),
                summary: r.summary.clone(),
            }))?;
        }
        reports.push((t.name.clone(), r));
    }
    Ok(ModeRun {
        mode,
        policy,
        logs,
        reports,
    })
}
