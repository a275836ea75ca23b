//! Learned components: the attention TSP policy trained with REINFORCE, the
//! LSTM sequence VAE that generates training instances, hardness-adaptive
//! instance perturbation, latent-space PCA and the checkpoint container.

pub mod checkpoint;
mod error;
pub mod hac;
pub mod pca;
pub mod policy;
pub mod vae;

pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use hac::{HacConfig, Surrogate, SurrogateChoice};
pub use policy::{
    decode, encode, maybe_update_baseline, reinforce_loss, DecodeKind, DecodeMode, DecodeResult, PolicyConfig,
    RolloutBaseline, SolverPolicy,
};
pub use vae::{canonicalize_sequence, sample_instances, train_vae, vae_elbo_loss, VaeConfig, VaeModel, VaeTrainConfig};
