use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iedc_core::{InitMethod, ThresholdStrategy};

#[derive(Debug, Parser)]
#[command(name = "iedc", version, about = "Overlapping community detection, generators and evaluation")]
pub struct Cli {
    /// Log verbosity on stderr.
    #[arg(long, global = true, default_value = "warn", value_parser = ["off", "error", "warn", "info", "debug", "trace"])]
    pub log_level: String,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "IEDC_THREADS")]
    pub threads: Option<usize>,

    /// Rendering of the report written to stdout (or `--out`).
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect communities in an edge list.
    Detect(DetectArgs),
    /// Generate a synthetic network with a planted cover.
    Generate(GenerateArgs),
    /// Score a detected cover.
    Evaluate(EvaluateArgs),
    /// Average conductance (and optionally NMI/F1) over a range of k.
    Sweep(SweepArgs),
    /// Extract an overlap-anchored subnetwork.
    Sample(SampleArgs),
    /// Run a benchmark suite file (JSON or TOML).
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct AlgoArgs {
    #[arg(long, value_parser = parse_init, default_value = "edge")]
    pub init: InitMethod,
    #[arg(long, value_parser = parse_threshold, default_value = "avg-all")]
    pub threshold: ThresholdStrategy,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Re-estimate the interaction model after every update.
    #[arg(long)]
    pub refresh_model: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Cover file, one community per line.
    #[arg(long)]
    pub out_cover: Option<PathBuf>,
    /// Membership probabilities as CSV.
    #[arg(long)]
    pub out_probs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Mmsb,
    LfrLite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Sparse,
    Dense,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Starting parameters; individual flags override them.
    #[arg(long, value_enum, default_value_t = Preset::Sparse)]
    pub preset: Preset,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// MMSB Dirichlet concentration.
    #[arg(long, help_heading = "MMSB")]
    pub alpha: Option<f64>,
    #[arg(long, help_heading = "MMSB")]
    pub beta_in: Option<f64>,
    #[arg(long, help_heading = "MMSB")]
    pub beta_out: Option<f64>,
    /// Mixing parameter.
    #[arg(long, help_heading = "LFR-lite")]
    pub mu: Option<f64>,
    #[arg(long, help_heading = "LFR-lite")]
    pub avg_degree: Option<f64>,
    #[arg(long, help_heading = "LFR-lite")]
    pub max_degree: Option<usize>,
    /// Number of nodes in two communities.
    #[arg(long, help_heading = "LFR-lite")]
    pub overlap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_graph: PathBuf,
    #[arg(long)]
    pub out_truth: PathBuf,
    /// Parameters and realized statistics as JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub detected: PathBuf,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_metric, default_value = "nmi,f1,modularity,conductance")]
    pub metrics: Vec<iedc_core::metrics::Metric>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// Adds NMI and F1 columns.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Include wall-clock timings (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_graph: PathBuf,
    #[arg(long)]
    pub out_truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub suite: PathBuf,
    /// Include wall-clock timings (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_init(s: &str) -> Result<InitMethod, String> {
    s.parse().map_err(|e: iedc_core::Error| e.to_string())
}

fn parse_threshold(s: &str) -> Result<ThresholdStrategy, String> {
    s.parse().map_err(|e: iedc_core::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<iedc_core::metrics::Metric, String> {
    s.parse().map_err(|e: iedc_core::Error| e.to_string())
}
