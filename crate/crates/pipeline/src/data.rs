use cogs_core::dataset::{DatasetSource, InstanceDataset};
use cogs_core::distributions::{GeneratorConfig, GeneratorKind};
use cogs_core::tsplib::Provenance;
use cogs_core::TspInstance;
use cogs_models::hac::hac_step;
use cogs_models::{sample_instances, HacConfig, Surrogate, SolverPolicy, VaeModel};

use crate::error::{Error, Result};
use crate::mode::TrainingMode;

/// Model, surrogate and step settings for the hardening step.
pub struct HacContext<'a> {
    pub model: &'a SolverPolicy,
    pub surrogate: Surrogate<'a>,
    pub config: &'a HacConfig,
}

/// Inputs shared by every mode's data generation.
pub struct DataSources<'a> {
    pub n: usize,
    pub vae: Option<&'a VaeModel>,
    pub vae_data: &'a GeneratorKind,
}

/// One epoch of training data.
///
/// * `uniform`: `sample_uniform` keyed by `derive_seed(epoch_seed, "uniform", [i])`
/// * `hac`: the same uniform instances, hardened
/// * `cogs`: VAE decodes of `z ~ N(0, I)` keyed by `epoch_seed`, hardened
/// * `cogs_no_hac`: the same VAE decodes
/// * `no_vae`: the VAE's training distribution keyed by `epoch_seed`, hardened
pub fn make_training_data(
    mode: TrainingMode,
    epoch_seed: u64,
    sources: &DataSources<'_>,
    count: usize,
    hac: Option<&HacContext<'_>>,
) -> Result<InstanceDataset> {
    let name = format!("train-{mode}");
    let generated = |kind: &GeneratorKind| {
        InstanceDataset::generate(name.clone(), &GeneratorConfig::new(kind.clone(), sources.n, epoch_seed), count)
    };
    let base = match mode {
        TrainingMode::Uniform | TrainingMode::Hac => generated(&GeneratorKind::Uniform)?,
        TrainingMode::NoVae => generated(sources.vae_data)?,
        TrainingMode::Cogs | TrainingMode::CogsNoHac => {
            let vae = sources.vae.ok_or(Error::MissingInput {
                mode: mode.name(),
                what: "trained VAE",
            })?;
            if vae.config().n != sources.n {
                return Err(Error::Config(format!(
                    "VAE decodes {} points, training uses {}",
                    vae.config().n,
                    sources.n
                )));
            }
            let instances = sample_instances(vae, count, epoch_seed)?;
            let provenance = (0..count)
                .map(|i| Provenance {
                    source: "vae".into(),
                    seed: cogs_core::seed::derive_seed(epoch_seed, "vae/z", &[i as u64]),
                })
                .collect();
            InstanceDataset::new(
                name.clone(),
                DatasetSource::Vae {
                    checkpoint: "in-memory".into(),
                },
                epoch_seed,
                instances,
                provenance,
            )?
        }
    };
    if !mode.uses_hac() {
        return Ok(base);
    }
    let ctx = hac.ok_or(Error::MissingInput {
        mode: mode.name(),
        what: "hardening context",
    })?;
    let hardened: Vec<TspInstance> = hac_step(ctx.model, &ctx.surrogate, &base.instances, ctx.config)?;
    Ok(InstanceDataset {
        instances: hardened,
        ..base
    })
}
