use std::collections::BTreeMap;

use cogs_core::oracle::OracleMethod;
use cogs_core::stats::{mean, sample_std, welch_t_test};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{GapSummary, METRICS};

/// One evaluation of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub test_set: String,
    pub mode: String,
    pub seed: u64,
    pub summary: GapSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    /// Sample standard deviation; `None` with a single seed.
    pub std: Option<f64>,
    /// Per-seed values in seed order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub test_set: String,
    pub mode: String,
    pub seeds: Vec<u64>,
    pub oracle_method: OracleMethod,
    pub metrics: BTreeMap<String, MetricStat>,
}

/// Welch two-sample t-test between two modes on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub test_set: String,
    pub metric: String,
    pub mode_a: String,
    pub mode_b: String,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub records: Vec<EvalRecord>,
    pub groups: Vec<GroupSummary>,
    pub tests: Vec<PairTest>,
    /// Non-fatal problems, such as groups with a single seed.
    pub flags: Vec<String>,
}

impl RunSummary {
    pub fn group(&self, test_set: &str, mode: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.test_set == test_set && g.mode == mode)
    }
}

/// Mean and sample deviation per (test set, mode, metric), plus Welch
/// p-values for every mode pair on each test set and metric.
pub fn aggregate_runs(mut records: Vec<EvalRecord>) -> Result<RunSummary> {
    records.sort_by(|a, b| (&a.test_set, &a.mode, a.seed).cmp(&(&b.test_set, &b.mode, b.seed)));
    let mut grouped: BTreeMap<(String, String), Vec<&EvalRecord>> = BTreeMap::new();
    for r in &records {
        grouped.entry((r.test_set.clone(), r.mode.clone())).or_default().push(r);
    }
    let mut flags = Vec::new();
    let mut groups = Vec::new();
    for ((test_set, mode), rs) in &grouped {
        let method = rs[0].summary.oracle_method;
        if rs.iter().any(|r| r.summary.oracle_method != method) {
            return Err(Error::Config(format!(
                "{test_set}/{mode} mixes oracle methods"
            )));
        }
        if rs.len() < 2 {
            flags.push(format!("{test_set}/{mode}: single seed, deviation undefined"));
        }
        let metrics = METRICS
            .iter()
            .map(|&m| {
                let values: Vec<f64> = rs.iter().map(|r| r.summary.metric(m).expect("known metric")).collect();
                (
                    m.to_string(),
                    MetricStat {
                        mean: mean(&values),
                        std: sample_std(&values),
                        values,
                    },
                )
            })
            .collect();
        groups.push(GroupSummary {
            test_set: test_set.clone(),
            mode: mode.clone(),
            seeds: rs.iter().map(|r| r.seed).collect(),
            oracle_method: method,
            metrics,
        });
    }
    let mut tests = Vec::new();
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            if a.test_set != b.test_set || a.seeds.len() < 2 || b.seeds.len() < 2 {
                continue;
            }
            for &m in &METRICS {
                let w = welch_t_test(&a.metrics[m].values, &b.metrics[m].values)?;
                tests.push(PairTest {
                    test_set: a.test_set.clone(),
                    metric: m.to_string(),
                    mode_a: a.mode.clone(),
                    mode_b: b.mode.clone(),
                    t: w.t,
                    df: w.df,
                    p: w.p,
                });
            }
        }
    }
    Ok(RunSummary {
        records,
        groups,
        tests,
        flags,
    })
}
