use cogs_core::oracle::OracleMethod;
use cogs_pipeline::eval::{evaluate, tail_mean, GapReport, GapSummary, OracleTable};
use cogs_pipeline::{aggregate_runs, EvalRecord, LogRow, RunDir};
use cogs_core::distributions::sample_uniform;
use cogs_core::oracle::OracleChoice;
use cogs_models::{DecodeMode, PolicyConfig, SolverPolicy};
use proptest::prelude::*;

fn summary(mean: f64, method: OracleMethod, seed: u64) -> GapSummary {
    GapSummary {
        count: 100,
        mean,
        worst_1: mean + 1.0,
        worst_0_5: mean + 2.0,
        worst_0_1: mean + 3.0,
        oracle_method: method,
        seed,
        epoch: None,
    }
}

fn record(mode: &str, seed: u64, mean: f64) -> EvalRecord {
    EvalRecord {
        test_set: "clustered".into(),
        mode: mode.into(),
        seed,
        summary: summary(mean, OracleMethod::LocalSearch, seed),
    }
}

#[test]
fn identical_groups_give_t_zero_p_one() {
    let vals = [0.1, 0.3, 0.2, 0.25];
    let recs = vals
        .iter()
        .enumerate()
        .flat_map(|(s, &v)| [record("uniform", s as u64, v), record("cogs", s as u64, v)])
        .collect();
    let sum = aggregate_runs(recs).unwrap();
    assert!(sum.flags.is_empty());
    let t = sum.tests.iter().find(|t| t.metric == "mean").unwrap();
    assert_eq!(t.t, 0.0);
    assert_eq!(t.p, 1.0);
}

#[test]
fn separated_groups_are_significant() {
    let recs = (0..5)
        .flat_map(|s| {
            let j = s as f64 * 1e-4;
            [record("uniform", s, j), record("cogs", s, 1.0 + j)]
        })
        .collect();
    let sum = aggregate_runs(recs).unwrap();
    for t in &sum.tests {
        assert!(t.p < 1e-6, "{t:?}");
    }
    let g = sum.group("clustered", "cogs").unwrap();
    assert_eq!(g.seeds, vec![0, 1, 2, 3, 4]);
    assert!((g.metrics["mean"].mean - 1.0002).abs() < 1e-12);
}

#[test]
fn single_seed_is_flagged_not_fatal() {
    let sum = aggregate_runs(vec![record("uniform", 0, 0.1), record("cogs", 0, 0.2)]).unwrap();
    assert_eq!(sum.flags.len(), 2);
    assert!(sum.tests.is_empty());
    assert_eq!(sum.group("clustered", "uniform").unwrap().metrics["mean"].std, None);
}

#[test]
fn mixed_oracle_methods_are_rejected() {
    let mut b = record("uniform", 1, 0.2);
    b.summary.oracle_method = OracleMethod::HeldKarp;
    assert!(aggregate_runs(vec![record("uniform", 0, 0.1), b]).is_err());
}

#[test]
fn oracle_tours_give_zero_gaps() {
    let instances: Vec<_> = (0..20).map(|s| sample_uniform(8, s).unwrap()).collect();
    let oracle = OracleTable::solve(&instances, &[], &OracleChoice::HeldKarp).unwrap();
    let r = GapReport::from_costs(&oracle.costs, &oracle, 0, None).unwrap();
    assert!(r.gaps.iter().all(|g| *g == 0.0));
    assert_eq!((r.summary.mean, r.summary.worst_1, r.summary.worst_0_1), (0.0, 0.0, 0.0));
}

#[test]
fn evaluate_keeps_worst_instances_in_order() {
    let instances: Vec<_> = (0..30).map(|s| sample_uniform(9, 50 + s).unwrap()).collect();
    let oracle = OracleTable::solve(&instances, &[], &OracleChoice::HeldKarp).unwrap();
    let policy = SolverPolicy::new(PolicyConfig::tiny(), 2).unwrap();
    let r = evaluate(&policy, &instances, &oracle, 0, Some(1), 3).unwrap();
    assert!(r.summary.tails_monotone());
    assert_eq!(r.worst_instances.len(), 3);
    assert!(r.worst_instances.windows(2).all(|w| w[0].gap >= w[1].gap));
    let top = &r.worst_instances[0];
    assert_eq!(top.gap, r.gaps.iter().copied().fold(f64::MIN, f64::max));
    let greedy = policy.decode_one(&instances[top.index], DecodeMode::Greedy).unwrap();
    assert_eq!(greedy.tour.order(), &top.model_tour[..]);
}

#[test]
fn run_dir_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunDir::create(dir.path()).unwrap();
    let s = summary(0.05, OracleMethod::HeldKarp, 3);
    run.write_json(&run.summary_path(), &s).unwrap();
    let back: GapSummary = run.read_json(&run.summary_path()).unwrap();
    assert_eq!(back, s);
    let row = LogRow::Eval(cogs_pipeline::rundir::EvalRow {
        test_set: "uniform".into(),
        mode: "hac".into(),
        summary: s,
    });
    run.append_log(&row).unwrap();
    run.append_log(&row).unwrap();
    assert_eq!(run.read_log().unwrap(), vec![row.clone(), row]);
    assert!(RunDir::open(dir.path().join("missing")).is_err());
}

#[test]
fn malformed_log_line_is_reported() {
    let text = "{\"type\":\"nonsense\"}\n";
    let err = cogs_pipeline::rundir::parse_log(text.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("log line 1"), "{err}");
}

proptest! {
    #[test]
    fn emitted_reports_are_tail_monotone(gaps in prop::collection::vec(0.0f64..5.0, 1..3000)) {
        let r = GapReport::from_gaps(gaps.clone(), OracleMethod::LocalSearch, 0, None);
        prop_assert!(r.summary.tails_monotone());
        // The clamped values never move by more than rounding.
        prop_assert!((r.summary.worst_1 - tail_mean(&gaps, 1.0)).abs() <= 1e-12 * (1.0 + r.summary.worst_1));
    }
}
