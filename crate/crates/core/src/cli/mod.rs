//! Command-line front end.
//!
//! ```text
//! epr-loc run       --config job.toml [--out DIR] [--seed N] [--realizations N] [--workers N] [--force]
//! epr-loc sweep     --config job.toml ...
//! epr-loc lightcone --config job.toml ...
//! epr-loc fit       --results DIR/results.csv --kind power-law --window 1e3,1e7
//! ```
//!
//! Exit codes: 0 success, 1 configuration or usage, 2 IO or malformed input,
//! 3 numerical failure.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "epr-loc", version, about = "EPR pair in a disordered XXZ chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for ensemble runs (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one disorder ensemble.
    Run(JobArgs),
    /// Run every point of the [sweep] section and summarize.
    Sweep(JobArgs),
    /// Compute ΔS_N between the configured chain and its truncations.
    Lightcone(JobArgs),
    /// Fit a results.csv or summary.csv.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct JobArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Master seed, decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Overwrite an existing run directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitCommandKind {
    /// S ~ A t^{-v} over a time window of results.csv.
    PowerLaw,
    /// Tail average of results.csv.
    Saturation,
    /// S(∞) ~ A e^{-βL} across summary.csv rows.
    ExpL,
    /// 1 - S(∞) ~ A h^c across summary.csv rows.
    HPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ColumnArg {
    Neg,
    Logneg,
    Conc,
    Eof,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// A results.csv (power-law, saturation).
    #[arg(long, conflicts_with = "summary")]
    pub results: Option<PathBuf>,
    /// A summary.csv (exp-l, h-power).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: FitCommandKind,
    /// Fit window "lo,hi" in units of 1/J.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
    #[arg(long, default_value_t = config::DEFAULT_TAIL_DECADES)]
    pub tail_decades: f64,
    #[arg(long, value_enum, default_value = "logneg")]
    pub column: ColumnArg,
    /// Where to write fits.json (default: next to the input).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

pub fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("bad lower bound {a:?}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("bad upper bound {b:?}: {e}"))?;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(format!("need 0 < lo < hi, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs a parsed command line, returning the paths it wrote.
pub fn execute(cli: Cli) -> Result<Vec<PathBuf>> {
    let workers = cli.workers.unwrap_or_else(default_workers).max(1);
    match cli.command {
        Command::Run(job) => commands::cmd_run(&job, workers),
        Command::Sweep(job) => commands::cmd_sweep(&job, workers),
        Command::Lightcone(job) => commands::cmd_lightcone(&job, workers),
        Command::Fit(args) => commands::cmd_fit(&args),
    }
}
