//! Gap tables: one block per (test set, metric), one row per mode, the
//! best mean in each block marked `**like this**`.

use std::collections::BTreeMap;

use cogs_pipeline::aggregate::GroupSummary;
use cogs_pipeline::eval::METRICS;
use cogs_pipeline::{aggregate_runs, EvalRecord, LogRow, RunSummary, TrainingMode};

use crate::error::{CliError, Result};

pub fn metric_label(metric: &str) -> Option<&'static str> {
    Some(match metric {
        "mean" => "",
        "worst_1" => "Worst 1%",
        "worst_0_5" => "Worst 0.5%",
        "worst_0_1" => "Worst 0.1%",
        _ => return None,
    })
}

pub fn mode_label(mode: &str) -> String {
    match mode {
        "uniform" => "Uniform".into(),
        "hac" => "HAC".into(),
        "cogs" => "COGS".into(),
        "cogs_no_hac" => "COGS (no HAC)".into(),
        "no_vae" => "COGS (no VAE)".into(),
        other => other.into(),
    }
}

fn mode_rank(mode: &str) -> usize {
    TrainingMode::ALL
        .iter()
        .position(|m| m.name() == mode)
        .unwrap_or(TrainingMode::ALL.len())
}

/// Eval rows of several logs as records. A later row for the same
/// (test set, mode, seed) replaces an earlier one.
pub fn eval_records(rows: impl IntoIterator<Item = LogRow>) -> Vec<EvalRecord> {
    let mut latest = BTreeMap::new();
    for row in rows {
        if let LogRow::Eval(e) = row {
            let key = (e.test_set.clone(), e.mode.clone(), e.summary.seed);
            latest.insert(
                key,
                EvalRecord {
                    test_set: e.test_set,
                    mode: e.mode,
                    seed: e.summary.seed,
                    summary: e.summary,
                },
            );
        }
    }
    latest.into_values().collect()
}

/// Aggregates records; every mode of a test set must share one oracle method.
pub fn summarize(records: Vec<EvalRecord>) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(CliError::runtime("no eval rows found"));
    }
    let summary = aggregate_runs(records).map_err(|e| CliError::runtime(e.to_string()))?;
    let mut methods = BTreeMap::new();
    for g in &summary.groups {
        let m = *methods.entry(g.test_set.as_str()).or_insert(g.oracle_method);
        if m != g.oracle_method {
            return Err(CliError::runtime(format!(
                "test set {} mixes oracle methods ({} and {})",
                g.test_set,
                m.name(),
                g.oracle_method.name()
            )));
        }
    }
    Ok(summary)
}

fn cell(g: &GroupSummary, metric: &str) -> String {
    let s = &g.metrics[metric];
    match s.std {
        Some(std) => format!("{:.3} ± {:.3}", 100.0 * s.mean, 100.0 * std),
        None => format!("{:.3}", 100.0 * s.mean),
    }
}

pub struct Table {
    /// Aligned text for terminals and files.
    pub text: String,
    /// Tab-separated data, one row per cell, gaps in percent.
    pub tsv: String,
}

pub fn render_table(summary: &RunSummary, metrics: &[String]) -> Result<Table> {
    if let Some(bad) = metrics.iter().find(|m| !METRICS.contains(&m.as_str())) {
        return Err(CliError::usage(format!("unknown metric {bad:?}")));
    }
    let mut by_test: BTreeMap<&str, Vec<&GroupSummary>> = BTreeMap::new();
    for g in &summary.groups {
        by_test.entry(g.test_set.as_str()).or_default().push(g);
    }
    let mut blocks: Vec<Vec<[String; 3]>> = Vec::new();
    let mut tsv = String::from("dataset\tmetric\tmode\tmean\tstd\tseeds\toracle\n");
    for metric in metrics {
        for (test, groups) in &by_test {
            let mut groups = groups.clone();
            groups.sort_by_key(|g| (mode_rank(&g.mode), g.mode.clone()));
            let best = groups
                .iter()
                .map(|g| g.metrics[metric.as_str()].mean)
                .fold(f64::INFINITY, f64::min);
            let label = metric_label(metric).unwrap_or_default();
            let dataset = if label.is_empty() {
                test.to_string()
            } else {
                format!("{test} {label}")
            };
            let mut rows = Vec::new();
            for (i, g) in groups.iter().enumerate() {
                let s = &g.metrics[metric.as_str()];
                let (mut model, mut value) = (mode_label(&g.mode), cell(g, metric));
                if groups.len() > 1 && s.mean == best {
                    model = format!("**{model}**");
                    value = format!("**{value}**");
                }
                rows.push([if i == 0 { dataset.clone() } else { String::new() }, model, value]);
                tsv.push_str(&format!(
                    "{test}\t{metric}\t{}\t{:.6}\t{}\t{}\t{}\n",
                    g.mode,
                    100.0 * s.mean,
                    s.std.map_or("nan".into(), |d| format!("{:.6}", 100.0 * d)),
                    g.seeds.len(),
                    g.oracle_method.name()
                ));
            }
            blocks.push(rows);
        }
    }
    let header = ["Dataset".to_string(), "Model".into(), "Gap (%)".into()];
    let width = |c: usize| {
        blocks
            .iter()
            .flatten()
            .chain(std::iter::once(&header))
            .map(|r| r[c].chars().count())
            .max()
            .unwrap_or(0)
    };
    let w = [width(0), width(1), width(2)];
    let line = |r: &[String; 3]| {
        format!("{:<a$} | {:<b$} | {}\n", r[0], r[1], r[2], a = w[0], b = w[1])
            .trim_end()
            .to_string()
            + "\n"
    };
    let rule = format!("{}-+-{}-+-{}\n", "-".repeat(w[0]), "-".repeat(w[1]), "-".repeat(w[2]));
    let mut text = line(&header);
    for b in &blocks {
        text.push_str(&rule);
        for r in b {
            text.push_str(&line(r));
        }
    }
    Ok(Table { text, tsv })
}
