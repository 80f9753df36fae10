mod commands;
mod config;
mod io;
mod pipeline;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use outlier_coreset::NoiseKind;

use crate::pipeline::{Method, Task};

/// Layered-sampling coresets for clustering and regression with outliers.
#[derive(Debug, Parser)]
#[command(name = "laysam", version)]
pub struct Cli {
    /// Base seed; every stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory holding the pipeline artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance (data.csv).
    Gen(GenArgs),
    /// Perturb z random points (data_noisy.csv, outliers.json).
    Inject(InjectArgs),
    /// Min-max scale features onto [0, D] (data_normalized.csv).
    Normalize(NormalizeArgs),
    /// Build the anchor and a coreset (anchor.json, coreset.csv).
    Coreset(CoresetArgs),
    /// Run k-means-- or trimmed regression (solution.json).
    Solve(SolveArgs),
    /// Score the solution on the full data (metrics.csv).
    Eval(EvalArgs),
    /// Compare coreset and full costs around the anchor (probe.json).
    Probe(ProbeArgs),
    /// Sweep sigma over methods and trials (bench.csv, bench_summary.csv).
    Bench(BenchArgs),
    /// Run a whole pipeline from a TOML config (metrics.csv, metrics_summary.csv).
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub task: Task,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Number of planted centers (clustering only).
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long)]
    pub z: usize,
    #[arg(long, default_value = "gauss")]
    pub dist: NoiseKind,
    #[arg(long)]
    pub sigma: f64,
    /// Dataset to perturb instead of the manifest's current one.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Side length D of the target box.
    #[arg(long, default_value_t = 10.0)]
    pub side: f64,
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoresetArgs {
    #[arg(long, value_enum, default_value = "laysam")]
    pub method: Method,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    /// Total coreset size (required for unisam and nn).
    #[arg(long)]
    pub size: Option<usize>,
    /// Constant of the theoretical per-layer sample size.
    #[arg(long)]
    pub c: Option<f64>,
    /// Centers (clustering); defaults to the generator's k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Outlier count; defaults to the injected z.
    #[arg(long)]
    pub z: Option<usize>,
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub z: Option<usize>,
    /// 1 for median / absolute loss, 2 for means / squared loss.
    #[arg(long, default_value_t = 2)]
    pub power: u8,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trial number written to the metrics row.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Range size L; defaults to `range_factor` times the anchor cost.
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub range_factor: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub power: u8,
    /// Region side D for regression ranges.
    #[arg(long, default_value_t = 10.0)]
    pub side: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub task: Task,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub z: usize,
    /// Comma-separated perturbation scales.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value = "gauss")]
    pub dist: NoiseKind,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "laysam,unisam,nn"
    )]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, default_value_t = 2)]
    pub power: u8,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Repeat with derived seeds; overrides the config.
    #[arg(long)]
    pub trials: Option<usize>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    commands::dispatch(&cli)
}
