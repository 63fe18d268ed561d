//! The `revlab` command line: argument definitions and command runners.

pub mod commands;
pub mod error;
pub mod files;
pub mod report;


use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "revlab", version, about = "Reversiblizations of Markov generators: build, compare, verify")]
pub struct Cli {
    /// Tolerance for detailed-balance certificates.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Treat +∞ divergences as errors.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a π-reversible generator from a chain file.
    Reversiblize {
        input: PathBuf,
        /// e.g. "power:p=2", "cauchy:p=3,q=1", "log:p=1", "dual:mean=arithmetic",
        /// "balanced:g=barker", "named:tv".
        #[arg(long)]
        method: String,
        /// "stationary", a comma list, or a JSON file; defaults to the chain file's pi.
        #[arg(long)]
        pi: Option<String>,
        /// Output chain file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// D_f(A‖B) and its variants; prints the value.
    Divergence {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "kl")]
        f: String,
        /// plain, dbar, or renyi:<α>.
        #[arg(long, default_value = "plain")]
        variant: String,
        #[arg(long)]
        pi: Option<String>,
    },
    /// Projection onto π-reversible generators; several inputs give a centroid.
    Project {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        f: String,
        /// first: M is the first argument of D_f; second: M is the second.
        #[arg(long, value_enum)]
        direction: DirectionArg,
        /// Rate-penalty weight; > 0 selects the regularized problem.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral gap, relaxation and eigentime, hitting and variance functionals.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        pi: Option<String>,
        /// Target set A as indices or labels, comma separated.
        #[arg(long)]
        target: Option<String>,
        /// Laplace rate for E_π e^{−λτ_A}.
        #[arg(long)]
        lambda: Option<f64>,
        /// Centered observable, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        h: Option<String>,
    },
    /// Compare reversiblizations of one chain.
    Compare {
        input: PathBuf,
        #[arg(long)]
        pi: Option<String>,
        /// Repeatable; defaults to the power chain with P_{1/3}, C_{1,ln} and TV.
        #[arg(long = "kind")]
        kinds: Vec<String>,
        #[arg(long)]
        target: Option<String>,
        /// Laplace rates, comma separated (needs --target).
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        h: Option<String>,
        /// CSV table output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded identity and ordering suite.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Inclusive range "a..b" or a comma list.
        #[arg(long, default_value = "2..8")]
        sizes: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    First,
    Second,
}

/// What a command prints and the exit code it ends with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    commands::dispatch(cli)
}
