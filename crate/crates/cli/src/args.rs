use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use efgfom::dgf::DgfKind;
use efgfom::solver::Algorithm;

#[derive(Debug, Parser)]
#[command(name = "efgfom", version, about = "First-order solvers for sequence-form and scaled-extension games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a poker game, write it as JSON and print its size and weight statistics.
    Generate(GenerateArgs),
    /// Run a solver and write config.json, log.csv and summary.json to a fresh run directory.
    Solve(SolveArgs),
    /// Run the seeded invariant suites and print a JSON report; exits 1 on any failure.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// `kuhn` or `leduc`.
    pub name: String,
    /// Number of card ranks (leduc only).
    #[arg(long)]
    pub ranks: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exactly one game source.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Built-in game: `kuhn` or `leduc` (with `--ranks`).
    #[arg(long)]
    pub game: Option<String>,
    /// Game JSON written by `generate`.
    #[arg(long)]
    pub game_file: Option<PathBuf>,
    /// Chain file; `solve` needs one with an opponent chain and payoffs.
    #[arg(long)]
    pub chain_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub ranks: Option<usize>,
    #[arg(long, default_value = "egt", value_parser = parse_algorithm)]
    pub alg: Algorithm,
    #[arg(long, default_value = "dge", value_parser = parse_dgf)]
    pub dgf: DgfKind,
    /// Iterations (egt, mp) or gradient computations (egt-as).
    #[arg(long, visible_alias = "budget", default_value_t = 1000)]
    pub iters: usize,
    /// Recorded in the run configuration; solves draw no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parent directory of the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Log every N-th iteration instead of the default cadence.
    #[arg(long)]
    pub cadence: Option<usize>,
    /// Fill the wall_time_ms column; makes the CSV nondeterministic.
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub ranks: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for per-player weight tables (decision points and sequences).
    #[arg(long)]
    pub weights_dir: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: efgfom::Error| e.to_string())
}

fn parse_dgf(s: &str) -> Result<DgfKind, String> {
    s.parse().map_err(|e: efgfom::Error| e.to_string())
}
