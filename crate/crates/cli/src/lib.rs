//! Command-line front end: monitoring, guided generation, scene metrics and
//! batch experiments.
//!
//! Exit codes are shared by every command: [`EXIT_SATISFIED`] when the
//! formula holds (or the command simply succeeded), [`EXIT_VIOLATED`] when
//! it does not, [`EXIT_ERROR`] for usage, parse and validation errors.

pub mod commands;
pub mod metrics;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use strelgen_core::{Aggregation, GuidanceConfig};

pub const EXIT_SATISFIED: u8 = 0;
pub const EXIT_VIOLATED: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

/// Environment variable holding the log filter (`error`, `info`, `debug`, ...).
pub const LOG_ENV: &str = "STRELGEN_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "strelgen",
    version,
    about = "Colored spatio-temporal logic monitoring and guided scenario generation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robustness of a formula on a trace.
    Monitor(MonitorArgs),
    /// Gradient-guided sampling from a context scene.
    Guide(GuideArgs),
    /// Minimum pairwise distance and potential collisions of a trace.
    Metrics(MetricsArgs),
    /// Unguided versus guided satisfaction over many seeds.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MonitorMode {
    /// Exact quantitative robustness.
    Hard,
    /// Log-sum-exp robustness at temperature `--beta`.
    Smooth,
    /// Two-valued satisfaction.
    Boolean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Max,
    Min,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Max => Aggregation::Max,
            AggregationArg::Min => Aggregation::Min,
        }
    }
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub formula: PathBuf,
    #[arg(long)]
    pub graph_config: PathBuf,
    /// Report only this agent id.
    #[arg(long)]
    pub agent: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub time: usize,
    #[arg(long, value_enum, default_value_t = MonitorMode::Hard)]
    pub mode: MonitorMode,
    #[arg(long, default_value_t = 10.0)]
    pub beta: f64,
    /// How per-agent values combine into the exit status.
    #[arg(long, value_enum, default_value_t = AggregationArg::Max)]
    pub aggregation: AggregationArg,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_step: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub stop_margin: Option<f64>,
    #[arg(long, value_enum, default_value_t = AggregationArg::Max)]
    pub aggregation: AggregationArg,
}

impl OptimizerArgs {
    pub fn params(&self) -> GuidanceConfig {
        let d = GuidanceConfig::default();
        GuidanceConfig {
            eta: self.eta.unwrap_or(d.eta),
            lambda: self.lambda.unwrap_or(d.lambda),
            max_step: self.max_step.unwrap_or(d.max_step),
            max_restarts: self.restarts.unwrap_or(d.max_restarts),
            beta: self.beta.unwrap_or(d.beta),
            stop_margin: self.stop_margin.unwrap_or(d.stop_margin),
            aggregation: self.aggregation.into(),
            bottom: d.bottom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// Standard normal draw from `--seed`.
    Sample,
    /// The zero latent, which decodes to constant-velocity motion.
    Zero,
}

#[derive(Debug, Args)]
pub struct GuideArgs {
    /// Context file: initial agent states plus a `generator` block.
    #[arg(long, visible_alias = "trace")]
    pub context: PathBuf,
    #[arg(long)]
    pub formula: PathBuf,
    #[arg(long)]
    pub graph_config: PathBuf,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Starting latent of the first attempt; restarts always sample.
    #[arg(long, value_enum, default_value_t = InitArg::Sample)]
    pub init: InitArg,
    /// Result JSON with histories.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Generated trace, in the trace file format.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, visible_alias = "trace")]
    pub context: PathBuf,
    #[arg(long)]
    pub formula: PathBuf,
    #[arg(long)]
    pub graph_config: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, returning its exit code.
pub fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Monitor(a) => commands::monitor(&a),
        Command::Guide(a) => commands::guide(&a),
        Command::Metrics(a) => commands::metrics(&a),
        Command::Experiment(a) => commands::experiment(&a),
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    // A second initialisation (tests calling `main_with_args`) is harmless.
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args`, runs the command and maps errors to [`EXIT_ERROR`].
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_SATISFIED };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
