use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "atlaslab", version, about = "Atlas model samplers, simulator and verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw from P_a, Q_a, pi_a, pi or the restricted P_a and write draws.csv.
    Sample(Common),
    /// Integrate the finite system and write trajectory.csv.
    Simulate(Common),
    /// Run a verification suite and write report.json.
    Verify(Common),
    /// Time the step kernels and write bench.csv.
    Bench(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Pa,
    Qa,
    PiA,
    Pi,
    PaRestricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Hard,
    Mollified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

/// Flags shared by every subcommand. Flags a subcommand does not use are
/// recorded in the manifest and otherwise ignored.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Law to sample.
    #[arg(long, value_enum, ignore_case = true)]
    pub law: Option<Law>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Ranked drifts g1,g2,... (rank j gets g_j).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub drifts: Option<Vec<f64>>,
    /// Number of particles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of lowest ranks (sample columns, monitored ranks, tested gaps).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// Inverse temperature of the mollified drift.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Add the a/2 compensation drift.
    #[arg(long, value_enum)]
    pub shift: Option<Switch>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_draws: Option<usize>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Restriction level for the restricted P_a.
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub xi_grid: Option<Vec<f64>>,
    /// sampler, stationarity, pal-pitman, tail, girsanov or all.
    #[arg(long)]
    pub suite: Option<String>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Keep every k-th step in trajectory.csv; truncation monitoring stride.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Particle counts for bench.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// JSON settings file (or a previous manifest.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}
