//! `hutch`: estimate traces, plan sample sizes, compare planners, generate
//! test matrices and audit the accuracy bounds.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hutchinson::bounds::Method;
use hutchinson::operator::GeneratorSpec;

mod commands;

use commands::{CliError, Grid};

#[derive(Debug, Parser)]
#[command(name = "hutch", version, about = "Hutchinson trace estimation with sub-gamma accuracy bounds")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the trace of a matrix.
    Estimate(EstimateArgs),
    /// Plan the sample size for a target accuracy and confidence.
    Plan(PlanArgs),
    /// Tabulate all planners over a grid of ε (CSV by default).
    Compare(CompareArgs),
    /// Write a synthetic matrix in Matrix Market format.
    Gen(GenArgs),
    /// Check the accuracy bounds against exact oracles and simulation.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Generator spec, e.g. `wishart:256:256:3`.
    #[arg(long, conflicts_with = "matrix_market", required_unless_present = "matrix_market")]
    pub gen: Option<GeneratorSpec>,
    /// Matrix Market file to load.
    #[arg(long)]
    pub matrix_market: Option<PathBuf>,
    /// Number of probe vectors.
    #[arg(long, conflicts_with_all = ["eps", "delta"], required_unless_present_all = ["eps", "delta"])]
    pub n: Option<u64>,
    /// Target relative accuracy; plans n together with --delta.
    #[arg(long, requires = "delta")]
    pub eps: Option<f64>,
    /// Failure probability; plans n together with --eps.
    #[arg(long, requires = "eps")]
    pub delta: Option<f64>,
    /// Planner used with --eps/--delta.
    #[arg(long, default_value_t = Method::ThisWork)]
    pub method: Method,
    /// Rank for planners that need it; defaults to the matrix dimension.
    #[arg(long)]
    pub rank: Option<u64>,
    /// Probe seed, decimal or 0x-hex.
    #[arg(long, default_value = "0", value_parser = seed)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = Method::ThisWork)]
    pub method: Method,
    #[arg(long)]
    pub rank: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Grid `start:stop:count` (or a single value) inside (0, 3/8).
    #[arg(long)]
    pub eps: Grid,
    #[arg(long, default_value_t = 0.001)]
    pub delta: f64,
    #[arg(long)]
    pub rank: u64,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator spec: identity:m, diag-uniform:m[:seed], wishart:m[:k][:seed], rank:m:k[:seed].
    pub spec: GeneratorSpec,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Moments,
    Tails,
    Mgf,
    Hyper,
    Coverage,
    Ratio,
    All,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub suite: Suite,
    /// Largest moment order (moments: 8, hyper: 6, ratio: 100).
    #[arg(long)]
    pub dmax: Option<u32>,
    /// Include the 2×2 witness in the tails audit.
    #[arg(long)]
    pub witness: bool,
    /// Seed of the standard matrix suite.
    #[arg(long, default_value = "0", value_parser = seed)]
    pub suite_seed: u64,
    /// Seed for random chaoses and coverage repetitions.
    #[arg(long, default_value = "0", value_parser = seed)]
    pub seed: u64,
    /// Exit with status 4 if any case is violated.
    #[arg(long)]
    pub strict: bool,
    /// Report path prefix; writes PREFIX.json and PREFIX.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ε grid for tails (default 0.05:0.35:7) or single ε for coverage (default 0.1).
    #[arg(long)]
    pub eps: Option<Grid>,
    /// t grid for the MGF audit.
    #[arg(long, default_value = "0.05:0.35:7")]
    pub t: Grid,
    /// Coverage failure probability.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Coverage repetitions.
    #[arg(long, default_value_t = 2000)]
    pub reps: u64,
    /// Coverage matrix.
    #[arg(long, default_value = "wishart:256:256:0")]
    pub gen: GeneratorSpec,
    /// Coverage planner.
    #[arg(long, default_value_t = Method::ThisWork)]
    pub method: Method,
    /// Number of random chaoses for the hypercontractivity audit.
    #[arg(long, default_value_t = 100)]
    pub num: u64,
    /// Variables per random chaos.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
}

fn seed(text: &str) -> Result<u64, String> {
    hutchinson::sampler::parse_seed(text).map_err(|e| format!("invalid seed {text:?}: {e}"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let format = cli.format;
    match cli.command {
        Command::Estimate(a) => commands::estimate(&a, format),
        Command::Plan(a) => commands::plan(&a, format),
        Command::Compare(a) => commands::compare(&a, format),
        Command::Gen(a) => commands::gen(&a, format),
        Command::Audit(a) => commands::audit(&a, format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
