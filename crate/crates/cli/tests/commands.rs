use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cogs_cli::formats::{RunConfig, Tsplib50Manifest};
use cogs_core::dataset::InstanceDataset;
use cogs_pipeline::{GapReport, LogRow, RunDir};

fn cogs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogs")).args(args).output().unwrap()
}

#[track_caller]
fn ok(args: &[&str]) -> String {
    let out = cogs(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    cogs(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data")
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["gen-data", "--help"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["gen-data", "--kind", "uniform", "--count", "3", "--out", "x", "--bogus"]), 1);
    assert_eq!(code(&["gen-data", "--kind", "moon", "--count", "3", "--out", "x"]), 1);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cogs");
    let out = cogs(&["eval", "--data", s(&missing), "--oracle-tours", "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.cogs"));
}

#[test]
fn gen_data_is_deterministic_and_checks_kind_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.cogs"), dir.path().join("b.cogs"));
    for p in [&a, &b] {
        let line = ok(&["gen-data", "--kind", "uniform", "--n", "50", "--count", "100", "--seed", "7", "--out", s(p)]);
        assert!(line.contains("100 uniform instances") && line.contains("seed 7"), "{line}");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ds = InstanceDataset::read_from(&a).unwrap();
    assert_eq!((ds.len(), ds.n()), (100, 50));

    let c = dir.path().join("c.cogs");
    assert_eq!(
        code(&["gen-data", "--kind", "uniform", "--count", "3", "--band-width", "0.2", "--out", s(&c)]),
        1
    );
    assert_eq!(
        code(&["gen-data", "--kind", "diagonal", "--count", "3", "--band-width", "-1", "--out", s(&c)]),
        1
    );
    assert!(!c.exists(), "no file on failure");
    ok(&["gen-data", "--kind", "diagonal", "--n", "10", "--count", "3", "--band-width", "0.2", "--out", s(&c)]);
}

#[test]
fn tsplib50_build_reports_skips_and_rebuilds_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.cogs"), dir.path().join("b.cogs"));
    let fx = fixtures();
    for p in [&a, &b] {
        ok(&["build-tsplib50", "--tsplib-dir", s(&fx), "--count", "25", "--seed", "3", "--out", s(p)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let m: Tsplib50Manifest = serde_json::from_slice(&std::fs::read(dir.path().join("a.cogs.manifest.json")).unwrap()).unwrap();
    let skipped: Vec<&str> = m.skipped.iter().map(|f| f.file.as_str()).collect();
    assert_eq!(skipped, ["att532.tsp", "gr17.tsp"]);
    assert_eq!(m.sources.len(), 1);
    assert_eq!(m.sources[0].instances, 25);
    assert_eq!(m.instances.len(), 25);
    let ds = InstanceDataset::read_from(&a).unwrap();
    assert_eq!(ds.provenance.iter().map(|p| p.seed).collect::<Vec<_>>(), m.instances.iter().map(|i| i.seed).collect::<Vec<_>>());

    // Only ineligible files: nonzero exit naming each of them.
    let bad = dir.path().join("bad");
    std::fs::create_dir(&bad).unwrap();
    std::fs::copy(fx.join("gr17.tsp"), bad.join("gr17.tsp")).unwrap();
    std::fs::copy(fx.join("att532.tsp"), bad.join("att532.tsp")).unwrap();
    let out = cogs(&["build-tsplib50", "--tsplib-dir", s(&bad), "--count", "5", "--out", s(&dir.path().join("c.cogs"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gr17.tsp") && err.contains("att532.tsp"), "{err}");
}

#[test]
fn self_oracle_eval_gives_an_all_zero_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("u.cogs");
    let run = dir.path().join("run");
    std::fs::create_dir(&run).unwrap();
    ok(&["gen-data", "--kind", "uniform", "--n", "8", "--count", "20", "--out", s(&data)]);
    for seed in ["0", "1"] {
        let report = dir.path().join(format!("r{seed}.json"));
        ok(&[
            "eval", "--data", s(&data), "--oracle-tours", "--oracle", "held-karp", "--run-dir", s(&run), "--seed", seed,
            "--out", s(&report),
        ]);
        let r: GapReport = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
        assert!(r.gaps.iter().all(|g| *g == 0.0));
    }
    let table = dir.path().join("table.txt");
    let text = ok(&["plot", "table", "--run-dir", s(&run), "--out", s(&table)]);
    assert_eq!(std::fs::read_to_string(&table).unwrap(), text);
    let values: Vec<&str> = text.lines().filter(|l| l.contains("oracle")).map(|l| l.rsplit("| ").next().unwrap()).collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| *v == "0.000 ± 0.000"), "{text}");
}

#[test]
fn smoke_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let test = p("clustered.cogs");
    ok(&["gen-data", "--kind", "clustered_uniform", "--n", "8", "--count", "30", "--seed", "5", "--out", s(&test)]);

    // VAE side.
    let vae = p("vae.ckpt");
    let vae_run = p("vae-run");
    ok(&[
        "train-vae", "--n", "8", "--epochs", "2", "--samples-per-epoch", "32", "--batch-size", "16", "--hidden", "8",
        "--latent-dim", "4", "--run-dir", s(&vae_run), "--out", s(&vae),
    ]);
    let rows = RunDir::open(&vae_run).unwrap().read_log().unwrap();
    assert_eq!(rows.iter().filter(|r| matches!(r, LogRow::VaeEpoch(_))).count(), 2);
    let sampled = p("vae.cogs");
    ok(&["sample-vae", "--vae", s(&vae), "--count", "12", "--seed", "2", "--out", s(&sampled)]);
    assert_eq!(InstanceDataset::read_from(&sampled).unwrap().len(), 12);
    ok(&["plot", "gallery", "--data", s(&test), "--data", s(&sampled), "--per-row", "3", "--out", s(&p("gallery.svg"))]);
    let proj = p("latent.json");
    ok(&["latent-pca", "--vae", s(&vae), "--count", "20", "--out", s(&proj)]);
    ok(&["plot", "latent", "--projection", s(&proj), "--out", s(&p("latent.svg"))]);
    assert_eq!(std::fs::read_to_string(p("latent.tsv")).unwrap().lines().count(), 41);

    // Solver side: two modes, one seed each.
    let micro = [
        "--n", "8", "--epochs", "2", "--warmup-epochs", "1", "--batch-size", "16", "--batches-per-epoch", "2",
        "--validation-size", "16", "--oracle", "held-karp",
    ];
    let test_spec = format!("clustered={}", s(&test));
    assert_eq!(code(&[&["train-solver", "--mode", "cogs", "--run-dir", s(&p("x"))][..], &micro].concat()), 1);
    for mode in ["hac", "cogs"] {
        let run = p(mode);
        let out = ok(&[
            &["train-solver", "--mode", mode, "--run-dir", s(&run), "--vae", s(&vae), "--test", &test_spec][..],
            &micro,
        ]
        .concat());
        assert!(out.contains("clustered: mean"), "{out}");
        let cfg: RunConfig = serde_json::from_slice(&std::fs::read(run.join("config.json")).unwrap()).unwrap();
        assert_eq!((cfg.pipeline.n, cfg.pipeline.epochs, cfg.mode.name()), (8, 2, mode));
        assert!(run.join("checkpoints/final.ckpt").exists());
        let report = p(&format!("{mode}.json"));
        ok(&["eval", "--run-dir", s(&run), "--data", s(&test), "--test-name", "clustered-again", "--out", s(&report)]);
        let rows = RunDir::open(&run).unwrap().read_log().unwrap();
        let evals: Vec<_> = rows
            .iter()
            .filter_map(|r| match r {
                LogRow::Eval(e) => Some(e),
                _ => None,
            })
            .collect();
        assert_eq!(evals.len(), 2);
        assert_eq!(evals[0].summary, evals[1].summary, "eval reproduces the in-run evaluation");
        assert_eq!(evals[1].mode, mode);
    }
    let curves = p("curves.svg");
    ok(&["plot", "curves", "--run-dir", s(&p("hac")), "--run-dir", s(&p("cogs")), "--out", s(&curves)]);
    let tsv = std::fs::read_to_string(p("curves.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 2 * 2, "{tsv}");
    let text = ok(&["plot", "table", "--run-dir", s(&p("hac")), "--run-dir", s(&p("cogs")), "--metrics", "mean,worst_1", "--out", s(&p("t.txt"))]);
    assert!(text.contains("clustered Worst 1%") && text.contains("COGS") && text.contains("HAC"), "{text}");
    ok(&["plot", "worst", "--report", s(&p("cogs.json")), "--out", s(&p("worst.svg"))]);
    assert_eq!(std::fs::read_to_string(p("worst.tsv")).unwrap().lines().count(), 4);
}

/// A second eligible source so gap and size can correlate.
fn write_grid_source(path: &Path, side: usize) {
    let mut t = format!("NAME : grid{}\nTYPE : TSP\nDIMENSION : {}\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n", side * side, side * side);
    for i in 0..side * side {
        t.push_str(&format!("{} {} {}\n", i + 1, (i % side) * 10 + (i * 7) % 3, (i / side) * 10));
    }
    t.push_str("EOF\n");
    std::fs::write(path, t).unwrap();
}

#[test]
fn gap_size_plot_reads_manifest_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let src = p("src");
    std::fs::create_dir(&src).unwrap();
    std::fs::copy(fixtures().join("pcb442.tsp"), src.join("pcb442.tsp")).unwrap();
    write_grid_source(&src.join("grid64.tsp"), 8);
    let data = p("t50.cogs");
    ok(&["build-tsplib50", "--tsplib-dir", s(&src), "--count", "12", "--out", s(&data)]);
    let run = p("run");
    ok(&[
        "train-solver", "--mode", "uniform", "--run-dir", s(&run), "--n", "8", "--epochs", "1", "--warmup-epochs", "0",
        "--batch-size", "8", "--batches-per-epoch", "1", "--validation-size", "8", "--oracle", "held-karp",
    ]);
    let report = p("r.json");
    ok(&[
        "eval", "--policy", s(&run.join("checkpoints/final.ckpt")), "--data", s(&data), "--oracle", "local-search",
        "--oracle-restarts", "2", "--out", s(&report),
    ]);
    let line = ok(&[
        "plot", "gap-size", "--report", s(&report), "--data", s(&data), "--manifest", s(&p("t50.cogs.manifest.json")),
        "--out", s(&p("gap.svg")),
    ]);
    assert!(line.contains("pearson r"), "{line}");
    let tsv = std::fs::read_to_string(p("gap.tsv")).unwrap();
    assert!(tsv.starts_with("# pearson_r\t"));
    assert_eq!(tsv.lines().count(), 2 + 12);
    assert!(tsv.lines().skip(2).all(|l| l.contains("\t442\t") || l.contains("\t64\t")), "{tsv}");
}
