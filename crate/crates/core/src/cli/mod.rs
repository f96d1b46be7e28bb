//! The `fmsolve` command line: one subcommand per experiment, CSV and SVG
//! outputs under a single output directory.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors (including
//! unreadable inputs), 3 when the numerics fail.

mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::ode::Method;
pub use config::{resolve_seed, RunConfig, TrainSection, RUN_CONFIG_FORMAT_VERSION, SEED_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fmsolve", version, about = "Explicit ODE solvers for flow-matching samplers")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed; overrides FMSOLVE_SEED and the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing); overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global error vs step size on y' = -y, with fitted orders.
    Convergence(ConvergenceArgs),
    /// Stability-region rasters and the explicit-Euler blow-up demo.
    Stability(StabilityArgs),
    /// Train a flow-matching model.
    Train(TrainArgs),
    /// Draw samples from a trained model with one solver.
    Sample(SampleArgs),
    /// NFE vs SWD over a solver grid, optionally sweeping width or training length.
    Benchmark(BenchmarkArgs),
    /// Jacobian eigenvalues and condition numbers along sampling paths.
    Jacobian(JacobianArgs),
    /// Step sizes chosen by DOPRI5 during one sampling run.
    DopriTrace(DopriTraceArgs),
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Number of decoupled copies of the test equation.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Step sizes (default 2^-3 .. 2^-10).
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<f64>,
    /// DOPRI5 tolerances (atol = rtol), used in place of a step sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8])]
    pub tolerances: Vec<f64>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub re_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub re_max: f64,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub im_min: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub im_max: f64,
    /// Raster spacing along both axes.
    #[arg(long, default_value_t = 0.05)]
    pub resolution: f64,
    /// Decay rate of the demo problem.
    #[arg(long, default_value_t = -15.0, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Euler step sizes for the demo.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0 / 6.0])]
    pub demo_h: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub t1: f64,
    /// Maximum number of demo steps per trace.
    #[arg(long, default_value_t = 200)]
    pub n_report: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_parser = Method::parse_arg)]
    pub solver: Method,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub atol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub rtol: f64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Trained model; when absent (or when sweeping) models are trained from the config.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 200)]
    pub projections: usize,
    /// Hidden widths to sweep, retraining for each.
    #[arg(long, value_delimiter = ',', conflicts_with = "epochs")]
    pub hidden: Vec<usize>,
    /// Training lengths to sweep, retraining for each.
    #[arg(long, value_delimiter = ',')]
    pub epochs: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct JacobianArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n_samples: usize,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_TIME_GRID_POINTS)]
    pub time_points: usize,
    /// RK4 steps over [0, 1] for the trajectories.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct DopriTraceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1e-5)]
    pub atol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub rtol: f64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

impl Method {
    fn parse_arg(s: &str) -> std::result::Result<Method, String> {
        Method::parse(s).map_err(|e| e.to_string())
    }
}

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_USAGE
    }
}

/// Parses `args` (including the program name), runs the command, reports to
/// stdout/stderr and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match run(&cli, env_seed.as_deref()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command. `env_seed` is the value of `FMSOLVE_SEED`, if set.
pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<()> {
    let config = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = resolve_seed(cli.common.seed, env_seed, config.seed)?;
    let out = cli.common.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = commands::Ctx { config, seed, out };
    match &cli.command {
        Command::Convergence(a) => commands::convergence(&ctx, a),
        Command::Stability(a) => commands::stability(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Sample(a) => commands::sample(&ctx, a),
        Command::Benchmark(a) => commands::benchmark(&ctx, a),
        Command::Jacobian(a) => commands::jacobian(&ctx, a),
        Command::DopriTrace(a) => commands::dopri_trace(&ctx, a),
    }
}
