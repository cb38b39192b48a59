//! Command-line grammar.
//!
//! Vectors are comma-separated reals (`0.7,0.4`); beliefs are
//! colon-separated bounds within comma-separated dimensions
//! (`0.2:0.8,0.1:0.5`).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "captrust",
    version,
    about = "Capability-based trust model: simulate, fit and query"
)]
pub struct Cli {
    /// Seed for every random stream used by the subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Bins per capability dimension (grids and trust integrals).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: Option<u64>,

    /// Output directory.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identify a synthetic agent's capabilities from simulated outcomes.
    Simulate(SimulateArgs),
    /// Cross-validate the trust model and the OPT baseline on a dataset.
    Fit(FitArgs),
    /// Natural and artificial trust for one belief and task.
    Trust(TrustArgs),
    /// Check a dataset file and report its shape.
    ValidateData(ValidateArgs),
    /// Write a synthetic dataset rated by the trust model.
    GenerateData(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// True capabilities of the agent, one per dimension.
    #[arg(long, required = true, value_delimiter = ',', value_parser = unit_real)]
    pub capabilities: Vec<f64>,

    /// Number of simulated tasks.
    #[arg(long, default_value_t = 1000)]
    pub tasks: usize,

    /// Success probability when the agent meets the requirements.
    #[arg(long, default_value_t = 0.95, value_parser = unit_real)]
    pub p_high: f64,

    /// Success probability otherwise.
    #[arg(long, default_value_t = 0.05, value_parser = unit_real)]
    pub p_low: f64,

    /// Lattice step for the fitted bounds.
    #[arg(long, default_value_t = 0.05)]
    pub resolution: f64,

    /// Observation counts to snapshot [default: 0,50,200,1000 capped at --tasks, plus --tasks].
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset file (JSON Lines).
    #[arg(long)]
    pub data: PathBuf,

    /// Cross-validation folds.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub folds: u64,

    #[arg(long, default_value_t = 500)]
    pub epochs: usize,

    #[arg(long, default_value_t = 0.01, value_parser = positive_real)]
    pub learning_rate: f64,

    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 50)]
    pub patience: usize,

    /// Share of each training fold held out for early stopping.
    #[arg(long, default_value_t = 0.15, value_parser = unit_real)]
    pub validation_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TrustArgs {
    /// Belief support, `lower:upper` per dimension.
    #[arg(long, required = true, value_delimiter = ',', value_parser = bounds)]
    pub belief: Vec<(f64, f64)>,

    /// Task requirements, one per dimension.
    #[arg(long, required = true, value_delimiter = ',', value_parser = unit_real)]
    pub task: Vec<f64>,

    /// Kernel steepness; a single value applies to every dimension.
    #[arg(long, value_delimiter = ',', value_parser = positive_real)]
    pub beta: Option<Vec<f64>>,

    /// Kernel exponent; a single value applies to every dimension.
    #[arg(long, value_delimiter = ',', value_parser = positive_real)]
    pub zeta: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    pub records: usize,

    /// Observed tasks per record, before the rated prediction task.
    #[arg(long, default_value_t = 3)]
    pub observations: usize,

    /// Dimension labels; their count sets the dimensionality.
    #[arg(long, value_delimiter = ',', default_value = "sensing,processing")]
    pub dimensions: Vec<String>,

    /// Generating steepness; a single value applies to every dimension.
    #[arg(long, value_delimiter = ',', default_value = "10", value_parser = positive_real)]
    pub beta: Vec<f64>,

    /// Generating exponent; a single value applies to every dimension.
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = positive_real)]
    pub zeta: Vec<f64>,

    /// Standard deviation of the truncated Gaussian rating noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn unit_real(s: &str) -> Result<f64, String> {
    let v = real(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn positive_real(s: &str) -> Result<f64, String> {
    let v = real(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be > 0"))
    }
}

fn bounds(s: &str) -> Result<(f64, f64), String> {
    let (l, u) = s.split_once(':').ok_or_else(|| format!("`{s}` is not `lower:upper`"))?;
    let (l, u) = (unit_real(l)?, unit_real(u)?);
    if l > u {
        return Err(format!("lower {l} exceeds upper {u}"));
    }
    Ok((l, u))
}

/// Repeats a single value `n` times; otherwise the length must be `n`.
pub fn broadcast(values: &[f64], n: usize, flag: &str) -> Result<Vec<f64>, String> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(format!("--{flag} has {len} values, expected 1 or {n}")),
    }
}
