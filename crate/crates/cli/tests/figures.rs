use clap::Parser;
use cogs_cli::args::{Cli, Command, CurveMetric};
use cogs_cli::commands::solver_config;
use cogs_cli::plot::{curves_tsv, epoch_curves, render_curves};
use cogs_cli::table::{eval_records, render_table, summarize};
use cogs_core::oracle::{OracleChoice, OracleMethod};
use cogs_pipeline::rundir::EvalRow;
use cogs_pipeline::{EpochLog, GapSummary, LogRow, Phase, TrainingMode};

fn epoch_row(mode: TrainingMode, phase: Phase, seed: u64, epoch: usize, gap: Option<f64>) -> EpochLog {
    EpochLog {
        phase,
        mode,
        seed,
        epoch,
        train_cost: 4.0,
        train_baseline_cost: 4.1,
        max_weight: 1.0,
        val_policy_cost: 4.0,
        val_baseline_cost: 4.0,
        baseline_replaced: false,
        oracle_method: OracleMethod::LocalSearch,
        mean_gap: gap,
        worst_1: gap.map(|g| 2.0 * g),
        worst_0_5: gap.map(|g| 3.0 * g),
        worst_0_1: gap.map(|g| 4.0 * g),
        data_hash: String::new(),
    }
}

fn two_epoch_log() -> Vec<EpochLog> {
    use TrainingMode::{Hac, Uniform};
    vec![
        epoch_row(Uniform, Phase::Warmup, 0, 0, Some(0.9)),
        epoch_row(Uniform, Phase::Train, 0, 0, Some(0.10)),
        epoch_row(Uniform, Phase::Train, 1, 0, Some(0.12)),
        epoch_row(Uniform, Phase::Train, 0, 1, Some(0.06)),
        epoch_row(Uniform, Phase::Train, 1, 1, Some(0.08)),
        epoch_row(Hac, Phase::Train, 0, 0, Some(0.20)),
        epoch_row(Hac, Phase::Train, 0, 1, Some(0.15)),
        // Skipped by the evaluation stride.
        epoch_row(Hac, Phase::Train, 0, 2, None),
    ]
}

#[test]
fn two_epoch_curve_matches_golden_table() {
    let (points, method) = epoch_curves(&two_epoch_log(), CurveMetric::MeanGap, Phase::Train).unwrap();
    assert_eq!(method, OracleMethod::LocalSearch);
    let golden = include_str!("data/two_epoch_curves.tsv");
    assert_eq!(curves_tsv(&points), golden);
    for mode in ["uniform", "hac"] {
        let m: Vec<f64> = points.iter().filter(|p| p.mode == mode).map(|p| p.mean).collect();
        assert!(m.windows(2).all(|w| w[1] < w[0]), "{mode}: {m:?}");
    }
}

#[test]
fn curve_svg_carries_axis_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curves.svg");
    let (points, method) = epoch_curves(&two_epoch_log(), CurveMetric::Worst1, Phase::Train).unwrap();
    render_curves(&points, CurveMetric::Worst1, method, &out).unwrap();
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.contains(">\nepoch\n<") || svg.contains(">epoch<"), "x label missing");
    assert!(svg.contains("validation worst 1% gap (%)"));
    assert!(svg.contains("Uniform") && svg.contains("HAC"));
}

#[test]
fn curves_refuse_mixed_oracle_methods() {
    let mut rows = two_epoch_log();
    rows[3].oracle_method = OracleMethod::HeldKarp;
    let err = epoch_curves(&rows, CurveMetric::MeanGap, Phase::Train).unwrap_err();
    assert!(err.to_string().contains("oracle methods"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

fn eval_row(mode: &str, seed: u64, mean: f64, method: OracleMethod) -> LogRow {
    LogRow::Eval(EvalRow {
        test_set: "tsplib50".into(),
        mode: mode.into(),
        summary: GapSummary {
            count: 1000,
            mean,
            worst_1: 10.0 * mean,
            worst_0_5: 11.0 * mean,
            worst_0_1: 12.0 * mean,
            oracle_method: method,
            seed,
            epoch: Some(50),
        },
    })
}

#[test]
fn table_has_mean_std_layout() {
    let m = OracleMethod::LocalSearch;
    let rows = vec![
        eval_row("cogs", 0, 0.016, m),
        eval_row("cogs", 1, 0.018, m),
        eval_row("uniform", 0, 0.02, m),
        eval_row("uniform", 1, 0.03, m),
        eval_row("hac", 0, 0.5, m),
        // Re-evaluation of the same seed replaces the earlier row.
        eval_row("hac", 0, 0.018, m),
        eval_row("hac", 1, 0.018, m),
    ];
    let summary = summarize(eval_records(rows)).unwrap();
    let t = render_table(&summary, &["mean".into(), "worst_1".into()]).unwrap();
    let expected = "\
Dataset           | Model    | Gap (%)
------------------+----------+-------------------
tsplib50          | Uniform  | 2.500 ± 0.707
                  | HAC      | 1.800 ± 0.000
                  | **COGS** | **1.700 ± 0.141**
------------------+----------+-------------------
tsplib50 Worst 1% | Uniform  | 25.000 ± 7.071
                  | HAC      | 18.000 ± 0.000
                  | **COGS** | **17.000 ± 1.414**
";
    assert_eq!(t.text, expected);
    assert_eq!(t.tsv.lines().count(), 1 + 6);
    assert!(t.tsv.contains("tsplib50\tmean\tcogs\t1.700000\t0.141421\t2\tlocal_search"));
}

#[test]
fn single_seed_rows_print_without_deviation() {
    let summary = summarize(eval_records(vec![eval_row("uniform", 3, 0.05, OracleMethod::HeldKarp)])).unwrap();
    let t = render_table(&summary, &["mean".into()]).unwrap();
    assert!(t.text.contains("| Uniform | 5.000\n"), "{}", t.text);
    assert_eq!(summary.flags.len(), 1);
}

#[test]
fn table_refuses_mixed_oracle_methods_across_modes() {
    let rows = vec![
        eval_row("uniform", 0, 0.02, OracleMethod::LocalSearch),
        eval_row("cogs", 0, 0.02, OracleMethod::HeldKarp),
    ];
    assert!(summarize(eval_records(rows)).is_err());
}

#[test]
fn table_rejects_unknown_metric() {
    let summary = summarize(eval_records(vec![eval_row("uniform", 0, 0.05, OracleMethod::HeldKarp)])).unwrap();
    let err = render_table(&summary, &["median".into()]).err().unwrap();
    assert_eq!(err.exit_code(), 1);
}

fn solver_args(extra: &[&str]) -> Box<cogs_cli::args::TrainSolverArgs> {
    let mut argv = vec!["cogs", "train-solver", "--run-dir", "unused", "--mode", "hac"];
    argv.extend_from_slice(extra);
    match Cli::try_parse_from(argv).unwrap().command {
        Command::TrainSolver(a) => a,
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"epochs": 7, "seed": 3, "hac": {"eta": 0.25}, "oracle": {"method": "held_karp"}}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let cfg = solver_config(&solver_args(&["--config", p, "--epochs", "9"])).unwrap();
    assert_eq!((cfg.epochs, cfg.seed, cfg.hac.eta), (9, 3, 0.25));
    assert_eq!(cfg.hac.tau, 0.5);
    assert_eq!(cfg.oracle, OracleChoice::HeldKarp);
    assert_eq!(cfg.n, 20);
    // A flag switching the oracle back keeps the other file values.
    let cfg = solver_config(&solver_args(&["--config", p, "--oracle", "local-search", "--oracle-restarts", "4"])).unwrap();
    assert_eq!(cfg.oracle, OracleChoice::LocalSearch { restarts: 4, seed: 0 });
    assert_eq!(cfg.epochs, 7);
}

#[test]
fn invalid_solver_config_is_a_usage_error() {
    let err = solver_config(&solver_args(&["--batch-size", "0"])).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let err = solver_config(&solver_args(&["--oracle", "held-karp", "--oracle-restarts", "3"])).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
