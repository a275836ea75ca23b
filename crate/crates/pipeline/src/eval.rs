use cogs_core::oracle::{OracleChoice, OracleMethod};
use cogs_core::tsplib::Provenance;
use cogs_core::{optimality_gap, TspInstance};
use cogs_models::{DecodeMode, SolverPolicy};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail widths reported for every evaluation, in percent.
pub const TAIL_PERCENTS: [f64; 3] = [1.0, 0.5, 0.1];

/// Number of instances in the worst `k_percent` of `n`: `ceil(k * n / 100)`,
/// at least 1.
pub fn tail_count(k_percent: f64, n: usize) -> usize {
    // The guard absorbs products like 0.1 * 1000 that round just above an
    // integer.
    let raw = (k_percent * n as f64 / 100.0 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Mean of the `tail_count(k_percent, n)` largest gaps.
pub fn tail_mean(gaps: &[f64], k_percent: f64) -> f64 {
    let mut sorted = gaps.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = tail_count(k_percent, sorted.len());
    sorted[..k].iter().sum::<f64>() / k as f64
}

/// Reference tours for a fixed instance list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub method: OracleMethod,
    pub costs: Vec<f64>,
    pub tours: Vec<Vec<usize>>,
}

impl OracleTable {
    /// Solves every instance; a failure names the instance and its
    /// provenance.
    pub fn solve(instances: &[TspInstance], provenance: &[Provenance], choice: &OracleChoice) -> Result<Self> {
        let mut costs = Vec::with_capacity(instances.len());
        let mut tours = Vec::with_capacity(instances.len());
        for (i, inst) in instances.iter().enumerate() {
            let r = choice.solve(inst, i as u64).map_err(|source| Error::Oracle {
                index: i,
                provenance: provenance
                    .get(i)
                    .map_or_else(|| "no provenance".into(), |p| format!("{} seed {}", p.source, p.seed)),
                source,
            })?;
            costs.push(r.length());
            tours.push(r.tour.into_order());
        }
        Ok(OracleTable {
            method: choice.method(),
            costs,
            tours,
        })
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }
}

/// One of the worst instances of an evaluation, kept for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstInstance {
    pub index: usize,
    pub gap: f64,
    pub points: Vec<(f64, f64)>,
    pub model_tour: Vec<usize>,
    pub oracle_tour: Vec<usize>,
}

/// Scalar part of a [`GapReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub count: usize,
    pub mean: f64,
    pub worst_1: f64,
    pub worst_0_5: f64,
    pub worst_0_1: f64,
    pub oracle_method: OracleMethod,
    pub seed: u64,
    pub epoch: Option<usize>,
}

impl GapSummary {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "mean" => Some(self.mean),
            "worst_1" => Some(self.worst_1),
            "worst_0_5" => Some(self.worst_0_5),
            "worst_0_1" => Some(self.worst_0_1),
            _ => None,
        }
    }

    /// `worst 0.1% >= worst 0.5% >= worst 1% >= mean`.
    pub fn tails_monotone(&self) -> bool {
        self.worst_0_1 >= self.worst_0_5 && self.worst_0_5 >= self.worst_1 && self.worst_1 >= self.mean
    }
}

pub const METRICS: [&str; 4] = ["mean", "worst_1", "worst_0_5", "worst_0_1"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Per-instance gaps as fractions, in dataset order.
    pub gaps: Vec<f64>,
    pub summary: GapSummary,
    pub worst_instances: Vec<WorstInstance>,
}

impl GapReport {
    pub fn from_gaps(gaps: Vec<f64>, oracle_method: OracleMethod, seed: u64, epoch: Option<usize>) -> Self {
        assert!(!gaps.is_empty(), "gap report of nothing");
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        // Exact tail means are nonincreasing in the tail width; the min()
        // calls only remove last-bit rounding differences.
        let worst_0_1 = tail_mean(&gaps, 0.1);
        let worst_0_5 = tail_mean(&gaps, 0.5).min(worst_0_1);
        let worst_1 = tail_mean(&gaps, 1.0).min(worst_0_5);
        let mean = mean.min(worst_1);
        GapReport {
            summary: GapSummary {
                count: gaps.len(),
                mean,
                worst_1,
                worst_0_5,
                worst_0_1,
                oracle_method,
                seed,
                epoch,
            },
            gaps,
            worst_instances: Vec::new(),
        }
    }

    /// Gaps of model costs against oracle costs.
    pub fn from_costs(model: &[f64], oracle: &OracleTable, seed: u64, epoch: Option<usize>) -> Result<Self> {
        if model.len() != oracle.len() || model.is_empty() {
            return Err(Error::Config(format!(
                "{} model costs for {} oracle costs",
                model.len(),
                oracle.len()
            )));
        }
        let gaps = model
            .iter()
            .zip(&oracle.costs)
            .map(|(&m, &o)| Ok(optimality_gap(m, o)?.fraction()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_gaps(gaps, oracle.method, seed, epoch))
    }
}

/// Greedy-decodes every instance and reports gaps against `oracle`.
/// The `keep_worst` largest-gap instances are stored with both tours.
pub fn evaluate(
    policy: &SolverPolicy,
    instances: &[TspInstance],
    oracle: &OracleTable,
    seed: u64,
    epoch: Option<usize>,
    keep_worst: usize,
) -> Result<GapReport> {
    if instances.is_empty() {
        return Err(Error::Config("evaluation set is empty".into()));
    }
    let mut costs = Vec::with_capacity(instances.len());
    let mut tours = Vec::with_capacity(instances.len());
    for inst in instances {
        let r = policy.decode_one(inst, DecodeMode::Greedy)?;
        costs.push(r.tour.length());
        tours.push(r.tour.into_order());
    }
    let mut report = GapReport::from_costs(&costs, oracle, seed, epoch)?;
    let mut idx: Vec<usize> = (0..instances.len()).collect();
    idx.sort_by(|&a, &b| report.gaps[b].total_cmp(&report.gaps[a]).then(a.cmp(&b)));
    report.worst_instances = idx
        .into_iter()
        .take(keep_worst)
        .map(|i| WorstInstance {
            index: i,
            gap: report.gaps[i],
            points: instances[i].points().iter().map(|p| (p.x, p.y)).collect(),
            model_tour: tours[i].clone(),
            oracle_tour: oracle.tours[i].clone(),
        })
        .collect();
    Ok(report)
}

/// Solves the oracle and evaluates in one call.
pub fn evaluate_with_oracle(
    policy: &SolverPolicy,
    dataset: &cogs_core::dataset::InstanceDataset,
    choice: &OracleChoice,
    seed: u64,
) -> Result<GapReport> {
    let table = OracleTable::solve(&dataset.instances, &dataset.provenance, choice)?;
    evaluate(policy, &dataset.instances, &table, seed, None, 3)
}
