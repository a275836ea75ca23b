//! Reference tour costs: exhaustive enumeration and Held–Karp for small
//! instances, a restarted 2-opt/Or-opt local search as the surrogate at
//! n = 50, and a TSPLib file bridge to an external exact solver.

mod brute_force;
mod external;
mod held_karp;
mod local_search;

use serde::{Deserialize, Serialize};

use crate::geometry::{Tour, TspInstance};

pub use brute_force::{brute_force, BRUTE_FORCE_MAX_N};
pub use external::{read_external_tour, write_external_solver_file, ExternalSolver, DEFAULT_SCALE};
pub use held_karp::{held_karp, held_karp_with_limit, HELD_KARP_MAX_N};
pub use local_search::{local_search_oracle, improve_tour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    BruteForce,
    HeldKarp,
    LocalSearch,
    External,
}

impl OracleMethod {
    pub fn is_exact(self) -> bool {
        !matches!(self, OracleMethod::LocalSearch)
    }

    pub fn name(self) -> &'static str {
        match self {
            OracleMethod::BruteForce => "brute_force",
            OracleMethod::HeldKarp => "held_karp",
            OracleMethod::LocalSearch => "local_search",
            OracleMethod::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub tour: Tour,
    pub method: OracleMethod,
    pub exact: bool,
}

impl OracleResult {
    pub(crate) fn new(tour: Tour, method: OracleMethod) -> Self {
        OracleResult {
            tour,
            method,
            exact: method.is_exact(),
        }
    }

    pub fn length(&self) -> f64 {
        self.tour.length()
    }
}

/// Which oracle to run on an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OracleChoice {
    BruteForce,
    HeldKarp,
    LocalSearch { restarts: usize, seed: u64 },
}

impl OracleChoice {
    /// Restarts used for the n = 50 surrogate unless configured otherwise.
    pub const DEFAULT_RESTARTS: usize = 50;

    pub fn default_local_search(seed: u64) -> Self {
        OracleChoice::LocalSearch {
            restarts: Self::DEFAULT_RESTARTS,
            seed,
        }
    }

    pub fn method(&self) -> OracleMethod {
        match self {
            OracleChoice::BruteForce => OracleMethod::BruteForce,
            OracleChoice::HeldKarp => OracleMethod::HeldKarp,
            OracleChoice::LocalSearch { .. } => OracleMethod::LocalSearch,
        }
    }

    /// Runs the oracle; `index` keys the local-search stream per instance.
    pub fn solve(&self, instance: &TspInstance, index: u64) -> crate::Result<OracleResult> {
        match *self {
            OracleChoice::BruteForce => brute_force(instance),
            OracleChoice::HeldKarp => held_karp(instance),
            OracleChoice::LocalSearch { restarts, seed } => local_search_oracle(
                instance,
                restarts,
                crate::seed::derive_seed(seed, "oracle/local_search", &[index]),
            ),
        }
    }
}
