use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cogs", version, about = "Train and evaluate neural TSP solvers on generatively sampled data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset from one of the synthetic distributions.
    GenData(GenDataArgs),
    /// Sample 50-node instances from a directory of TSPLib files.
    #[command(name = "build-tsplib50")]
    BuildTsplib50(BuildTsplibArgs),
    /// Train the instance VAE and write its checkpoint.
    TrainVae(TrainVaeArgs),
    /// Decode prior samples of a trained VAE into a dataset.
    SampleVae(SampleVaeArgs),
    /// Warm up and train a solver in one mode inside a run directory.
    TrainSolver(Box<TrainSolverArgs>),
    /// Evaluate a solver against oracle tours and write a gap report.
    Eval(EvalArgs),
    /// Project VAE posterior means of training and generated samples onto two components.
    LatentPca(LatentPcaArgs),
    /// Render figures and tables from logs and reports.
    #[command(subcommand)]
    Plot(PlotCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Kind {
    Uniform,
    GaussianMixture,
    Diagonal,
    ClusteredUniform,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Uniform => "uniform",
            Kind::GaussianMixture => "gaussian_mixture",
            Kind::Diagonal => "diagonal",
            Kind::ClusteredUniform => "clustered_uniform",
        }
    }
}

/// Per-kind overrides; each flag only applies to its own kind.
#[derive(Debug, Clone, Default, Args)]
pub struct KindFlags {
    /// gaussian_mixture: fewest modes per instance.
    #[arg(long)]
    pub min_modes: Option<usize>,
    /// gaussian_mixture: most modes per instance.
    #[arg(long)]
    pub max_modes: Option<usize>,
    /// gaussian_mixture: side of the square mode centers are drawn from.
    #[arg(long)]
    pub extent: Option<f64>,
    /// gaussian_mixture: per-mode standard deviation.
    #[arg(long)]
    pub spread: Option<f64>,
    /// diagonal: band width around the line.
    #[arg(long)]
    pub band_width: Option<f64>,
    /// diagonal: orthogonal jitter.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// clustered_uniform: most clusters per instance.
    #[arg(long)]
    pub max_clusters: Option<usize>,
    /// clustered_uniform: smallest cluster radius.
    #[arg(long)]
    pub radius_min: Option<f64>,
    /// clustered_uniform: largest cluster radius.
    #[arg(long)]
    pub radius_max: Option<f64>,
    /// clustered_uniform: chance a point ignores the clusters.
    #[arg(long)]
    pub uniform_probability: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset name stored in the header (defaults to the kind).
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub flags: KindFlags,
}

#[derive(Debug, Args)]
pub struct BuildTsplibArgs {
    #[arg(long)]
    pub tsplib_dir: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path (defaults to `<out>.manifest.json`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Skip sources with more nodes than this.
    #[arg(long)]
    pub max_source_dimension: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Desk-scale sizes for a single CPU core.
    Toy,
    /// Full-size defaults.
    Default,
}

#[derive(Debug, Args)]
pub struct TrainVaeArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Distribution the VAE is fitted to.
    #[arg(long, value_enum, default_value = "clustered_uniform")]
    pub kind: Kind,
    #[command(flatten)]
    pub flags: KindFlags,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "toy")]
    pub profile: Profile,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub samples_per_epoch: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Append per-epoch rows to this run directory's log.
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleVaeArgs {
    #[arg(long)]
    pub vae: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "vae")]
    pub name: String,
    /// Decode without observation noise.
    #[arg(long)]
    pub mean: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleFlag {
    BruteForce,
    HeldKarp,
    LocalSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurrogateFlag {
    Rollout,
    LocalSearch,
}

#[derive(Debug, Args)]
pub struct TrainSolverArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
    /// uniform, hac, cogs, cogs_no_hac or no_vae.
    #[arg(long)]
    pub mode: String,
    /// JSON configuration merged over the profile; flags win over both.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "toy")]
    pub profile: Profile,
    /// VAE checkpoint, required by the VAE modes.
    #[arg(long)]
    pub vae: Option<PathBuf>,
    /// Test set evaluated after training, as NAME=DATASET. Repeatable.
    #[arg(long = "test", value_name = "NAME=DATASET")]
    pub tests: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub batches_per_epoch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub validation_size: Option<usize>,
    #[arg(long)]
    pub eval_stride: Option<usize>,
    #[arg(long)]
    pub checkpoint_stride: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub hac_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub surrogate: Option<SurrogateFlag>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleFlag>,
    #[arg(long)]
    pub oracle_restarts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Policy checkpoint (defaults to the run directory's final checkpoint).
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Run directory: supplies mode, seed and oracle defaults and receives an eval row.
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
    /// Score the oracle's own tours instead of a policy.
    #[arg(long, conflicts_with = "policy")]
    pub oracle_tours: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Name recorded for the test set (defaults to the dataset name).
    #[arg(long)]
    pub test_name: Option<String>,
    /// Mode recorded in the eval row (defaults to the run's mode).
    #[arg(long)]
    pub mode: Option<String>,
    /// Seed recorded in the report (defaults to the run's seed, else 0).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleFlag>,
    #[arg(long)]
    pub oracle_restarts: Option<usize>,
    #[arg(long)]
    pub oracle_seed: Option<u64>,
    #[arg(long, default_value_t = 3)]
    pub keep_worst: usize,
}

#[derive(Debug, Args)]
pub struct LatentPcaArgs {
    #[arg(long)]
    pub vae: PathBuf,
    /// Samples per group.
    #[arg(long, default_value_t = 150)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training distribution of the VAE.
    #[arg(long, value_enum, default_value = "clustered_uniform")]
    pub kind: Kind,
    #[command(flatten)]
    pub flags: KindFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PlotCommand {
    /// Validation gap against epoch, mean across seeds with deviation bands.
    Curves(CurvesArgs),
    /// Gap table (mean ± std across seeds) from eval rows.
    Table(TableArgs),
    /// Worst instances of a report with model and oracle tours.
    Worst(WorstArgs),
    /// A grid of instances from one or more datasets.
    Gallery(GalleryArgs),
    /// Latent PCA scatter.
    Latent(LatentArgs),
    /// Gap against source size, with Pearson correlation.
    GapSize(GapSizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum CurveMetric {
    MeanGap,
    Worst1,
    Worst05,
    Worst01,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Run directories to read; repeatable.
    #[arg(long = "run-dir", required = true)]
    pub run_dirs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "mean_gap")]
    pub metric: CurveMetric,
    /// Include warm-up epochs instead of the training phase.
    #[arg(long)]
    pub warmup: bool,
    /// SVG output; the plotted data goes next to it as `.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long = "run-dir", required = true)]
    pub run_dirs: Vec<PathBuf>,
    /// Metrics to list per test set: mean, worst_1, worst_0_5, worst_0_1.
    #[arg(long, value_delimiter = ',', default_value = "mean,worst_1,worst_0_5,worst_0_1")]
    pub metrics: Vec<String>,
    /// Text output; a `.tsv` and the aggregate JSON go next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WorstArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GalleryArgs {
    /// Datasets, one row each; repeatable.
    #[arg(long = "data", required = true)]
    pub datasets: Vec<PathBuf>,
    /// Instances per row.
    #[arg(long, default_value_t = 4)]
    pub per_row: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LatentArgs {
    /// Projection written by `latent-pca`.
    #[arg(long)]
    pub projection: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GapSizeArgs {
    #[arg(long)]
    pub report: PathBuf,
    /// The evaluated TSPLib50 dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Manifest written by `build-tsplib50`.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
