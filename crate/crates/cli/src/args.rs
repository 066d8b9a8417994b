use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "egd", version, about = "Replicator and best-response dynamics for symmetric games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibria, stability, indifference sets and invariance for one game.
    Analyze(AnalyzeArgs),
    /// Integrate one orbit and write it as CSV.
    Simulate(SimulateArgs),
    /// Monte Carlo basins of attraction under both dynamics.
    Basins(BasinsArgs),
    /// Render an SVG phase portrait of a three-strategy game.
    Portrait(PortraitArgs),
    /// List the reference classes or check them against their expected signatures.
    Corpus(CorpusArgs),
}

/// Where the game comes from.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct GameSource {
    /// JSON game file with fields `name`, `n`, `payoffs`.
    #[arg(long, value_name = "FILE")]
    pub game: Option<PathBuf>,
    /// Reference class label such as `6_1`.
    #[arg(long, value_name = "LABEL")]
    pub corpus: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DynamicArg {
    Rd,
    Brd,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    GolmanPage,
    AN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Xml,
    Text,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: GameSource,
    /// Relative tolerance for Nash conditions.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Orbits per invariant pair in the drift check.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 50.0)]
    pub horizon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: GameSource,
    #[arg(long, value_enum, default_value = "rd")]
    pub dynamic: DynamicArg,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 50.0)]
    pub horizon: f64,
    /// Sampling interval for best-response orbits.
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    /// Also write the regime-switch events as JSON next to the CSV.
    #[arg(long)]
    pub events: bool,
    /// CSV path. With `--dynamic both` the files get `_rd` and `_brd` suffixes.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BasinsArgs {
    #[arg(long, value_name = "FILE", conflicts_with_all = ["corpus", "family"])]
    pub game: Option<PathBuf>,
    #[arg(long, value_name = "LABEL", conflicts_with = "family")]
    pub corpus: Option<String>,
    #[arg(long, value_enum, requires = "param")]
    pub family: Option<Family>,
    /// Family parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub param: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500.0)]
    pub horizon: f64,
    /// Half-width of the band around indifference sets left out of agreement.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Skip the sector and invariant-set harnesses.
    #[arg(long)]
    pub no_harness: bool,
    /// Per-sample CSV path; one file per game, suffixed with the parameter for families.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary destination; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PortraitArgs {
    #[command(flatten)]
    pub source: GameSource,
    #[arg(long, value_enum, default_value = "both")]
    pub dynamic: DynamicArg,
    /// Sampled orbits per panel.
    #[arg(long, default_value_t = 24)]
    pub orbits: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 40.0)]
    pub horizon: f64,
    /// Vertices (1-based) whose sector is shaded, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sector: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Print the reference classes and their matrices.
    #[arg(long, conflicts_with_all = ["all", "class"])]
    pub list: bool,
    /// Check every class.
    #[arg(long)]
    pub all: bool,
    /// Check one class; repeatable.
    #[arg(long, value_name = "LABEL")]
    pub class: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub report: ReportFormat,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
