mod commands;
mod output;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Gaussian probability of a polytope with an a-priori error bound.
#[derive(Debug, Parser)]
#[command(name = "gauss-polytope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the discretized program once and print the estimate and bound.
    Integrate(SolveArgs),
    /// Solve for a list of n (lambda = sqrt(n), beta = 1/n) and write a CSV.
    Sweep(SweepArgs),
    /// Monte Carlo reference, plus nested quadrature when T <= 3.
    Oracle(OracleArgs),
    /// Evaluate the error bound without solving.
    Bound(SolveArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML problem file.
    #[arg(long)]
    problem: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Use lambda = sqrt(n), beta = 1/n.
    #[arg(long, conflicts_with_all = ["lambda", "beta"])]
    n: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Largest cell count allowed for a single grid.
    #[arg(long)]
    cell_budget: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated n values.
    #[arg(long, default_value = "")]
    sweep: String,
    /// Comma-separated lambda per n, replacing sqrt(n).
    #[arg(long)]
    lambdas: Option<String>,
    /// Comma-separated beta per n, replacing 1/n.
    #[arg(long)]
    betas: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Exact reference value; replaces the Monte Carlo column.
    #[arg(long)]
    reference: Option<f64>,
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the `seconds` column with wall-clock time (makes output
    /// nondeterministic).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    cell_budget: Option<u64>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Absolute tolerance of the quadrature.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent problem file.
    Parse(String),
    /// I/O failure or a grid beyond the cell budget.
    Resource(String),
    /// Numerical parameters out of range.
    Invalid(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Invalid(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Resource(m) | CliError::Invalid(m) => m,
        }
    }
}

impl From<gauss_polytope_core::Error> for CliError {
    fn from(e: gauss_polytope_core::Error) -> Self {
        use gauss_polytope_core::Error as E;
        match e {
            E::InvalidParameter { .. } => CliError::Invalid(e.to_string()),
            E::Dimension(_) | E::NotPositiveDefinite { .. } | E::DegenerateRow { .. } => {
                CliError::Parse(e.to_string())
            }
            E::GridBudget { .. } | E::OutsideBox { .. } | E::Misaligned(_) => {
                CliError::Resource(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Integrate(a) => commands::integrate(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Bound(a) => commands::bound(&a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
