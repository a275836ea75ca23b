use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// Fresh uniform instances.
    Uniform,
    /// Uniform instances hardened by gradient ascent.
    Hac,
    /// VAE-decoded instances hardened by gradient ascent.
    Cogs,
    /// VAE-decoded instances, no hardening or re-weighting.
    CogsNoHac,
    /// The VAE's own training distribution, hardened.
    NoVae,
}

impl TrainingMode {
    pub const ALL: [TrainingMode; 5] = [
        TrainingMode::Uniform,
        TrainingMode::Hac,
        TrainingMode::Cogs,
        TrainingMode::CogsNoHac,
        TrainingMode::NoVae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrainingMode::Uniform => "uniform",
            TrainingMode::Hac => "hac",
            TrainingMode::Cogs => "cogs",
            TrainingMode::CogsNoHac => "cogs_no_hac",
            TrainingMode::NoVae => "no_vae",
        }
    }

    pub fn uses_vae(self) -> bool {
        matches!(self, TrainingMode::Cogs | TrainingMode::CogsNoHac)
    }

    /// Hardening step and hardness re-weighting are applied together.
    pub fn uses_hac(self) -> bool {
        matches!(self, TrainingMode::Hac | TrainingMode::Cogs | TrainingMode::NoVae)
    }
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrainingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        TrainingMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown training mode {s:?}")))
    }
}
