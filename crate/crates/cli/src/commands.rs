use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cogs_core::dataset::{DatasetSource, InstanceDataset};
use cogs_core::distributions::{GeneratorConfig, GeneratorKind};
use cogs_core::oracle::OracleChoice;
use cogs_core::seed::derive_seed;
use cogs_core::stats::pearson;
use cogs_core::tsplib::{build_tsplib50, load_source_dir, Tsplib50Options};
use cogs_models::pca::{convex_hull_area, latent_pca_projection};
use cogs_models::{sample_instances, train_vae, Checkpoint, SurrogateChoice, VaeConfig, VaeModel, VaeTrainConfig};
use cogs_pipeline::experiment::{build_validation, run_mode, warm_up, TestSet};
use cogs_pipeline::rundir::{EvalRow, VaeLogRow};
use cogs_pipeline::{
    evaluate, EpochLog, GapReport, LogRow, OracleTable, Phase, PipelineConfig, RunDir, TrainProbe, TrainingMode,
};
use serde_json::Value;

use crate::args::*;
use crate::error::{CliError, Result};
use crate::formats::*;
use crate::plot;
use crate::table;

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenData(a) => gen_data(&a),
        Command::BuildTsplib50(a) => build_tsplib(&a),
        Command::TrainVae(a) => train_vae_cmd(&a),
        Command::SampleVae(a) => sample_vae(&a),
        Command::TrainSolver(a) => train_solver(&a),
        Command::Eval(a) => eval(&a),
        Command::LatentPca(a) => latent_pca(&a),
        Command::Plot(p) => match p {
            PlotCommand::Curves(a) => plot_curves(&a),
            PlotCommand::Table(a) => plot_table(&a),
            PlotCommand::Worst(a) => plot_worst(&a),
            PlotCommand::Gallery(a) => plot_gallery(&a),
            PlotCommand::Latent(a) => plot_latent(&a),
            PlotCommand::GapSize(a) => plot_gap_size(&a),
        },
    }
}

/// Kind defaults with the kind-specific flags applied. A flag belonging to
/// another kind is a usage error.
pub fn generator_kind(kind: Kind, f: &KindFlags) -> Result<GeneratorKind> {
    let owned = [
        ("min-modes", f.min_modes.is_some(), Kind::GaussianMixture),
        ("max-modes", f.max_modes.is_some(), Kind::GaussianMixture),
        ("extent", f.extent.is_some(), Kind::GaussianMixture),
        ("spread", f.spread.is_some(), Kind::GaussianMixture),
        ("band-width", f.band_width.is_some(), Kind::Diagonal),
        ("jitter", f.jitter.is_some(), Kind::Diagonal),
        ("max-clusters", f.max_clusters.is_some(), Kind::ClusteredUniform),
        ("radius-min", f.radius_min.is_some(), Kind::ClusteredUniform),
        ("radius-max", f.radius_max.is_some(), Kind::ClusteredUniform),
        ("uniform-probability", f.uniform_probability.is_some(), Kind::ClusteredUniform),
    ];
    if let Some((flag, _, owner)) = owned.iter().find(|(_, set, owner)| *set && *owner != kind) {
        return Err(CliError::usage(format!("--{flag} only applies to --kind {}", owner.name())));
    }
    let mut g = GeneratorKind::by_name(kind.name())?;
    match &mut g {
        GeneratorKind::Uniform => {}
        GeneratorKind::GaussianMixture {
            min_modes,
            max_modes,
            extent,
            spread,
        } => {
            set(min_modes, f.min_modes);
            set(max_modes, f.max_modes);
            set(extent, f.extent);
            set(spread, f.spread);
        }
        GeneratorKind::Diagonal { band_width, jitter } => {
            set(band_width, f.band_width);
            set(jitter, f.jitter);
        }
        GeneratorKind::ClusteredUniform {
            max_clusters,
            radius_min,
            radius_max,
            uniform_probability,
        } => {
            set(max_clusters, f.max_clusters);
            set(radius_min, f.radius_min);
            set(radius_max, f.radius_max);
            set(uniform_probability, f.uniform_probability);
        }
    }
    Ok(g)
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn read_dataset(path: &Path) -> Result<InstanceDataset> {
    InstanceDataset::read_from(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::read_from(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn pct(x: f64) -> String {
    format!("{:.3}%", 100.0 * x)
}

fn gen_data(a: &GenDataArgs) -> Result<()> {
    if a.count == 0 {
        return Err(CliError::usage("--count must be positive"));
    }
    let cfg = GeneratorConfig::new(generator_kind(a.kind, &a.flags)?, a.n, a.seed);
    let name = a.name.clone().unwrap_or_else(|| a.kind.name().to_string());
    let ds = InstanceDataset::generate(name, &cfg, a.count)?;
    ds.write_to(&a.out)?;
    println!(
        "wrote {} {} instances (n {}, seed {}) to {}",
        ds.len(),
        a.kind.name(),
        a.n,
        a.seed,
        a.out.display()
    );
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}

fn build_tsplib(a: &BuildTsplibArgs) -> Result<()> {
    if a.count == 0 {
        return Err(CliError::usage("--count must be positive"));
    }
    let opts = Tsplib50Options {
        max_source_dimension: a.max_source_dimension,
    };
    let (accepted, rejected) = load_source_dir(&a.tsplib_dir, opts)
        .map_err(|e| CliError::runtime(format!("{}: {e}", a.tsplib_dir.display())))?;
    let skipped: Vec<SkippedFile> = rejected
        .iter()
        .map(|r| SkippedFile {
            file: file_name(&r.path),
            reason: r.reason.clone(),
        })
        .collect();
    if accepted.is_empty() {
        let list: Vec<String> = skipped.iter().map(|s| format!("  {}: {}", s.file, s.reason)).collect();
        return Err(CliError::runtime(format!(
            "no eligible EUC_2D sources in {}; rejected files:\n{}",
            a.tsplib_dir.display(),
            if list.is_empty() { "  (none)".to_string() } else { list.join("\n") }
        )));
    }
    let sources: Vec<_> = accepted.iter().map(|(_, s)| s.clone()).collect();
    let built = build_tsplib50(&sources, a.count, a.seed, opts)?;
    let mut drawn: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &built.provenance {
        *drawn.entry(p.source.as_str()).or_default() += 1;
    }
    let manifest = Tsplib50Manifest {
        dataset: file_name(&a.out),
        count: built.len(),
        seed: a.seed,
        max_source_dimension: a.max_source_dimension,
        sources: accepted
            .iter()
            .map(|(path, s)| ManifestSource {
                file: file_name(path),
                name: s.name.clone(),
                dimension: s.dimension,
                instances: drawn.get(s.name.as_str()).copied().unwrap_or(0),
            })
            .collect(),
        instances: built
            .provenance
            .iter()
            .enumerate()
            .map(|(index, p)| ManifestInstance {
                index,
                source: p.source.clone(),
                seed: p.seed,
            })
            .collect(),
        skipped,
    };
    let ds = InstanceDataset::new(
        "tsplib50",
        DatasetSource::Tsplib50 {
            files: manifest.sources.iter().map(|s| s.file.clone()).collect(),
            max_source_dimension: a.max_source_dimension,
        },
        a.seed,
        built.instances,
        built.provenance,
    )?;
    let manifest_path = a
        .manifest
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", a.out.display())));
    ds.write_to(&a.out)?;
    write_json(&manifest_path, &manifest)?;
    for s in &manifest.skipped {
        eprintln!("skipped {}: {}", s.file, s.reason);
    }
    println!(
        "wrote {} tsplib50 instances from {} sources ({} skipped, seed {}) to {}; manifest {}",
        ds.len(),
        manifest.sources.len(),
        manifest.skipped.len(),
        a.seed,
        a.out.display(),
        manifest_path.display()
    );
    Ok(())
}

fn train_vae_cmd(a: &TrainVaeArgs) -> Result<()> {
    let gen = GeneratorConfig::new(generator_kind(a.kind, &a.flags)?, a.n, a.seed);
    let (mut model_cfg, mut cfg) = match a.profile {
        Profile::Toy => (VaeConfig::toy(a.n), VaeTrainConfig::toy(gen, a.seed)),
        Profile::Default => (VaeConfig::new(a.n), VaeTrainConfig::new(gen, 100, a.seed)),
    };
    set(&mut cfg.epochs, a.epochs);
    set(&mut cfg.samples_per_epoch, a.samples_per_epoch);
    set(&mut cfg.batch_size, a.batch_size);
    set(&mut cfg.optimizer.lr, a.lr);
    set(&mut cfg.beta_max, a.beta_max);
    set(&mut model_cfg.latent_dim, a.latent_dim);
    set(&mut model_cfg.hidden, a.hidden);
    let mut model = VaeModel::new(model_cfg, a.seed)?;
    let run = a.run_dir.as_ref().map(RunDir::create).transpose()?;
    let logs = train_vae(&mut model, &cfg)?;
    if let Some(run) = &run {
        for l in &logs {
            run.append_log(&LogRow::VaeEpoch(VaeLogRow { seed: a.seed, log: *l }))?;
        }
    }
    Checkpoint::for_vae(&model, None, cfg.epochs as u64, None).write_to(&a.out)?;
    match logs.last() {
        Some(l) => println!(
            "trained VAE (n {}, latent {}, {} epochs): reconstruction {:.5}, kl {:.4}, output std {:.4} -> {}",
            a.n,
            model_cfg.latent_dim,
            logs.len(),
            l.reconstruction,
            l.kl,
            model.output_std(),
            a.out.display()
        ),
        None => println!("wrote untrained VAE (n {}) to {}", a.n, a.out.display()),
    }
    Ok(())
}

fn sample_vae(a: &SampleVaeArgs) -> Result<()> {
    if a.count == 0 {
        return Err(CliError::usage("--count must be positive"));
    }
    let mut model = read_checkpoint(&a.vae)?.vae()?;
    if a.mean {
        model.set_output_std(0.0)?;
    }
    let instances = sample_instances(&model, a.count, a.seed)?;
    let ds = InstanceDataset::new(
        a.name.clone(),
        DatasetSource::Vae {
            checkpoint: a.vae.display().to_string(),
        },
        a.seed,
        instances,
        Vec::new(),
    )?;
    ds.write_to(&a.out)?;
    println!(
        "wrote {} VAE samples (n {}, seed {}) to {}",
        ds.len(),
        ds.n(),
        a.seed,
        a.out.display()
    );
    Ok(())
}

/// Recursive object merge; an object carrying an enum tag replaces the
/// old value wholesale so fields of another variant do not linger.
fn merge(base: &mut Value, over: Value) {
    const TAGS: [&str; 4] = ["method", "surrogate", "kind", "source"];
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if v.is_object() && !TAGS.iter().any(|t| v.get(t).is_some()) => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn oracle_choice(flag: Option<OracleFlag>, restarts: Option<usize>, seed: Option<u64>, base: OracleChoice) -> Result<OracleChoice> {
    let choice = match flag {
        None => base,
        Some(OracleFlag::BruteForce) => OracleChoice::BruteForce,
        Some(OracleFlag::HeldKarp) => OracleChoice::HeldKarp,
        Some(OracleFlag::LocalSearch) => match base {
            OracleChoice::LocalSearch { .. } => base,
            _ => OracleChoice::default_local_search(0),
        },
    };
    match choice {
        OracleChoice::LocalSearch { restarts: r, seed: s } => Ok(OracleChoice::LocalSearch {
            restarts: restarts.unwrap_or(r),
            seed: seed.unwrap_or(s),
        }),
        _ if restarts.is_some() || seed.is_some() => Err(CliError::usage(
            "--oracle-restarts and --oracle-seed only apply to the local-search oracle",
        )),
        other => Ok(other),
    }
}

/// Profile, then config file, then flags.
pub fn solver_config(a: &TrainSolverArgs) -> Result<PipelineConfig> {
    let base = match a.profile {
        Profile::Toy => PipelineConfig::toy(),
        Profile::Default => PipelineConfig::default(),
    };
    let mut cfg = match &a.config {
        Some(path) => {
            let mut v = serde_json::to_value(&base)?;
            merge(&mut v, read_json(path)?);
            serde_json::from_value(v).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => base,
    };
    set(&mut cfg.seed, a.seed);
    set(&mut cfg.n, a.n);
    set(&mut cfg.epochs, a.epochs);
    set(&mut cfg.warmup_epochs, a.warmup_epochs);
    set(&mut cfg.batch_size, a.batch_size);
    set(&mut cfg.batches_per_epoch, a.batches_per_epoch);
    set(&mut cfg.optimizer.lr, a.lr);
    set(&mut cfg.validation_size, a.validation_size);
    set(&mut cfg.eval_stride, a.eval_stride);
    set(&mut cfg.checkpoint_stride, a.checkpoint_stride);
    set(&mut cfg.hac.eta, a.eta);
    set(&mut cfg.hac.tau, a.tau);
    set(&mut cfg.hac.steps, a.hac_steps);
    match a.surrogate {
        Some(SurrogateFlag::Rollout) => cfg.hac.surrogate = SurrogateChoice::RolloutBaseline,
        Some(SurrogateFlag::LocalSearch) if !matches!(cfg.hac.surrogate, SurrogateChoice::LocalSearch { .. }) => {
            cfg.hac.surrogate = SurrogateChoice::LocalSearch { restarts: 20, seed: 0 }
        }
        _ => {}
    }
    cfg.oracle = oracle_choice(a.oracle, a.oracle_restarts, None, cfg.oracle)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Prints one line per epoch to stderr.
struct Progress;

impl TrainProbe for Progress {
    fn on_epoch(&mut self, log: &EpochLog) {
        let gap = log.mean_gap.map_or_else(|| "-".to_string(), pct);
        eprintln!(
            "{} {} epoch {}: train cost {:.4}, val gap {}{}",
            log.phase.name(),
            log.mode,
            log.epoch + 1,
            log.train_cost,
            gap,
            if log.baseline_replaced { ", baseline updated" } else { "" }
        );
    }
}

fn parse_test_spec(s: &str) -> Result<TestSpec> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok(TestSpec {
            name: name.into(),
            path: path.into(),
        }),
        _ => Err(CliError::usage(format!("--test expects NAME=DATASET, got {s:?}"))),
    }
}

fn train_solver(a: &TrainSolverArgs) -> Result<()> {
    let cfg = solver_config(a)?;
    let mode: TrainingMode = a.mode.parse()?;
    let vae = match (&a.vae, mode.uses_vae()) {
        (Some(p), _) => Some(read_checkpoint(p)?.vae()?),
        (None, true) => return Err(CliError::usage(format!("mode {mode} needs --vae"))),
        (None, false) => None,
    };
    if let Some(v) = &vae {
        if v.config().n != cfg.n {
            return Err(CliError::usage(format!("VAE is for n = {}, solver n = {}", v.config().n, cfg.n)));
        }
    }
    let specs = a.tests.iter().map(|s| parse_test_spec(s)).collect::<Result<Vec<_>>>()?;
    let mut tests = Vec::with_capacity(specs.len());
    for s in &specs {
        let ds = read_dataset(Path::new(&s.path))?;
        if ds.n() != cfg.n {
            return Err(CliError::usage(format!("test set {} has n = {}, solver n = {}", s.name, ds.n(), cfg.n)));
        }
        tests.push(TestSet::solve(s.name.clone(), &ds, &cfg.oracle)?);
    }
    let run = RunDir::create(&a.run_dir)?;
    run.write_json(
        &run.config_path(),
        &RunConfig {
            mode,
            vae: a.vae.as_ref().map(|p| p.display().to_string()),
            tests: specs,
            pipeline: cfg.clone(),
        },
    )?;
    let validation = build_validation(&cfg)?;
    let warm = warm_up(&cfg, &validation, Some(&run), &mut Progress)?;
    let result = run_mode(&cfg, &warm, mode, vae.as_ref(), &validation, &tests, Some(&run), &mut Progress)?;
    let final_path = run.checkpoint_path("final");
    Checkpoint::for_policy(&result.policy, None, cfg.epochs as u64, None).write_to(&final_path)?;
    let last_gap = result
        .logs
        .iter()
        .chain(&warm.logs)
        .rev()
        .find_map(|l| l.mean_gap)
        .map_or_else(|| "-".to_string(), pct);
    println!(
        "trained {mode} (seed {}, {} warm-up + {} epochs): validation gap {last_gap} -> {}",
        cfg.seed,
        cfg.warmup_epochs,
        cfg.epochs,
        final_path.display()
    );
    for (name, r) in &result.reports {
        println!("  {name}: {}", summary_line(r));
    }
    Ok(())
}

fn summary_line(r: &GapReport) -> String {
    let s = &r.summary;
    format!(
        "mean {}, worst 1% {}, worst 0.5% {}, worst 0.1% {} ({} instances, {} oracle)",
        pct(s.mean),
        pct(s.worst_1),
        pct(s.worst_0_5),
        pct(s.worst_0_1),
        s.count,
        s.oracle_method.name()
    )
}

fn eval(a: &EvalArgs) -> Result<()> {
    let run = a.run_dir.as_ref().map(RunDir::open).transpose()?;
    let run_cfg: Option<RunConfig> = match &run {
        Some(r) if r.config_path().exists() => Some(r.read_json(&r.config_path())?),
        _ => None,
    };
    let base = run_cfg
        .as_ref()
        .map_or_else(|| OracleChoice::default_local_search(0), |c| c.pipeline.oracle);
    let oracle = oracle_choice(a.oracle, a.oracle_restarts, a.oracle_seed, base)?;
    let seed = a.seed.or(run_cfg.as_ref().map(|c| c.pipeline.seed)).unwrap_or(0);
    let policy = if a.oracle_tours {
        None
    } else {
        let path = match (&a.policy, &run) {
            (Some(p), _) => p.clone(),
            (None, Some(r)) => r.checkpoint_path("final"),
            (None, None) => return Err(CliError::usage("give --policy, --run-dir or --oracle-tours")),
        };
        Some(read_checkpoint(&path)?.policy()?)
    };
    let ds = read_dataset(&a.data)?;
    if ds.is_empty() {
        return Err(CliError::usage(format!("{} holds no instances", a.data.display())));
    }
    let table = OracleTable::solve(&ds.instances, &ds.provenance, &oracle)?;
    let report = match &policy {
        Some(p) => {
            let epoch = run_cfg.as_ref().map(|c| c.pipeline.epochs);
            evaluate(p, &ds.instances, &table, seed, epoch, a.keep_worst)?
        }
        None => GapReport::from_costs(&table.costs, &table, seed, None)?,
    };
    write_json(&a.out, &report)?;
    let test_set = a.test_name.clone().unwrap_or_else(|| ds.name.clone());
    if let Some(run) = &run {
        let mode = match (&a.mode, &run_cfg, policy.is_none()) {
            (Some(m), _, _) => m.clone(),
            (None, _, true) => "oracle".into(),
            (None, Some(c), false) => c.mode.name().into(),
            (None, None, false) => return Err(CliError::usage("--mode is required when the run directory has no config.json")),
        };
        run.append_log(&LogRow::Eval(EvalRow {
            test_set: test_set.clone(),
            mode,
            summary: report.summary.clone(),
        }))?;
    }
    println!("eval {test_set}: {} -> {}", summary_line(&report), a.out.display());
    Ok(())
}

fn latent_pca(a: &LatentPcaArgs) -> Result<()> {
    if a.count < 2 {
        return Err(CliError::usage("--count must be at least 2"));
    }
    let vae = read_checkpoint(&a.vae)?.vae()?;
    let n = vae.config().n;
    let gen = GeneratorConfig::new(generator_kind(a.kind, &a.flags)?, n, derive_seed(a.seed, "latent/train", &[]));
    let training = gen.sample_many(a.count)?;
    let generated = sample_instances(&vae, a.count, derive_seed(a.seed, "latent/sample", &[]))?;
    let projection = latent_pca_projection(&vae, &[("training".into(), training), ("generated".into(), generated)])?;
    let hull_areas: Vec<f64> = (0..projection.labels.len())
        .map(|i| convex_hull_area(&projection.points_of(i)))
        .collect();
    let ratio = projection.explained_variance_ratio;
    write_json(&a.out, &LatentPcaOutput { projection, hull_areas: hull_areas.clone() })?;
    println!(
        "latent PCA of {} + {} samples: explained variance {:.3}, {:.3}; hull areas training {:.4}, generated {:.4} -> {}",
        a.count,
        a.count,
        ratio[0],
        ratio[1],
        hull_areas[0],
        hull_areas[1],
        a.out.display()
    );
    Ok(())
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    out.with_extension(ext)
}

fn read_logs(dirs: &[PathBuf]) -> Result<Vec<LogRow>> {
    let mut rows = Vec::new();
    for d in dirs {
        let run = RunDir::open(d)?;
        rows.extend(run.read_log().map_err(|e| CliError::runtime(format!("{}: {e}", d.display())))?);
    }
    Ok(rows)
}

fn plot_curves(a: &CurvesArgs) -> Result<()> {
    let rows: Vec<EpochLog> = read_logs(&a.run_dirs)?
        .into_iter()
        .filter_map(|r| match r {
            LogRow::Epoch(e) => Some(e),
            _ => None,
        })
        .collect();
    let phase = if a.warmup { Phase::Warmup } else { Phase::Train };
    let (points, method) = plot::epoch_curves(&rows, a.metric, phase)?;
    let tsv = sidecar(&a.out, "tsv");
    write_text(&tsv, &plot::curves_tsv(&points))?;
    plot::render_curves(&points, a.metric, method, &a.out)?;
    println!("plotted {} points -> {} ({})", points.len(), a.out.display(), tsv.display());
    Ok(())
}

fn plot_table(a: &TableArgs) -> Result<()> {
    let summary = table::summarize(table::eval_records(read_logs(&a.run_dirs)?))?;
    let t = table::render_table(&summary, &a.metrics)?;
    write_text(&a.out, &t.text)?;
    write_text(&sidecar(&a.out, "tsv"), &t.tsv)?;
    write_json(&sidecar(&a.out, "json"), &summary)?;
    for f in &summary.flags {
        eprintln!("note: {f}");
    }
    print!("{}", t.text);
    Ok(())
}

fn plot_worst(a: &WorstArgs) -> Result<()> {
    let report: GapReport = read_json(&a.report)?;
    write_text(&sidecar(&a.out, "tsv"), &plot::worst_tsv(&report.worst_instances))?;
    plot::render_worst(&report.worst_instances, &a.out)?;
    println!("rendered {} worst instances -> {}", report.worst_instances.len(), a.out.display());
    Ok(())
}

fn plot_gallery(a: &GalleryArgs) -> Result<()> {
    if a.per_row == 0 {
        return Err(CliError::usage("--per-row must be positive"));
    }
    let mut rows = Vec::new();
    for p in &a.datasets {
        let ds = read_dataset(p)?;
        rows.push((ds.name.clone(), ds.instances.into_iter().take(a.per_row).collect::<Vec<_>>()));
    }
    write_text(&sidecar(&a.out, "tsv"), &plot::gallery_tsv(&rows))?;
    plot::render_gallery(&rows, &a.out)?;
    println!("rendered {} datasets -> {}", rows.len(), a.out.display());
    Ok(())
}

fn plot_latent(a: &LatentArgs) -> Result<()> {
    let p: LatentPcaOutput = read_json(&a.projection)?;
    let (labels, points) = (&p.projection.labels, &p.projection.points);
    if let Some((l, _)) = points.iter().find(|(l, _)| *l >= labels.len()) {
        return Err(CliError::runtime(format!("point label {l} out of range")));
    }
    write_text(&sidecar(&a.out, "tsv"), &plot::latent_tsv(labels, points))?;
    plot::render_latent(labels, points, &p.hull_areas, &a.out)?;
    println!("rendered {} latent points -> {}", points.len(), a.out.display());
    Ok(())
}

fn plot_gap_size(a: &GapSizeArgs) -> Result<()> {
    let report: GapReport = read_json(&a.report)?;
    let ds = read_dataset(&a.data)?;
    let manifest: Tsplib50Manifest = read_json(&a.manifest)?;
    if report.gaps.len() != ds.len() || ds.provenance.len() != ds.len() {
        return Err(CliError::runtime(format!(
            "report has {} gaps, dataset {} instances with {} provenance records",
            report.gaps.len(),
            ds.len(),
            ds.provenance.len()
        )));
    }
    let dims: BTreeMap<&str, usize> = manifest.sources.iter().map(|s| (s.name.as_str(), s.dimension)).collect();
    let mut rows = Vec::with_capacity(ds.len());
    for (i, (p, g)) in ds.provenance.iter().zip(&report.gaps).enumerate() {
        let d = *dims
            .get(p.source.as_str())
            .ok_or_else(|| CliError::runtime(format!("source {} of instance {i} is not in the manifest", p.source)))?;
        rows.push((i, p.source.clone(), d, 100.0 * g));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.2 as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let r = pearson(&xs, &ys).unwrap_or_else(|e| {
        eprintln!("note: correlation undefined ({e})");
        f64::NAN
    });
    write_text(&sidecar(&a.out, "tsv"), &plot::gap_size_tsv(&rows, r))?;
    plot::render_gap_size(&rows, r, &a.out)?;
    println!("gap vs size over {} instances: pearson r {r:.4} -> {}", rows.len(), a.out.display());
    Ok(())
}
