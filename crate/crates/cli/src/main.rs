mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Simulation runner for tokenized recycling incentive scenarios.
#[derive(Parser)]
#[command(name = "tokencycle", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct RunOptions {
    /// Number of Monte Carlo trials
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Master seed; trial i draws from the stream derived from (seed, i)
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (results do not depend on this); defaults to available cores
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "tokencycle-out")]
    out: PathBuf,
}

impl RunOptions {
    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a deterministic or monte-carlo scenario
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
        /// Histogram bins
        #[arg(long, default_value_t = tokencycle_core::montecarlo::DEFAULT_BINS)]
        bins: usize,
    },
    /// Paired tokenized-versus-subsidy comparison
    Compare {
        tokenized: PathBuf,
        subsidy: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Analytic partials checked against central differences
    Sensitivity {
        scenario: PathBuf,
        /// Evaluation time (defaults to the end of the scenario grid)
        #[arg(long)]
        at_time: Option<f64>,
        #[arg(long, default_value = "tokencycle-out")]
        out: PathBuf,
    },
    /// One Monte Carlo run per parameter value, on common random numbers
    Sweep {
        scenario: PathBuf,
        /// Parameter to vary (defaults to the sweep file's parameter)
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values (defaults to the sweep file's values)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Fit the tokenized model's token-value sd and participation elasticity to a target mean
    Calibrate {
        /// Target mean net benefit
        #[arg(long, default_value_t = 67_501.0, allow_negative_numbers = true)]
        target: f64,
        /// Tokenized comparison scenario supplying the fixed parameters
        #[arg(long)]
        base: Option<PathBuf>,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Validate a scenario file
    Validate {
        scenario: PathBuf,
        /// Print the canonical form
        #[arg(long)]
        canonical: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, opts, bins } => commands::run(&scenario, &opts, bins),
        Command::Compare {
            tokenized,
            subsidy,
            opts,
        } => commands::compare(&tokenized, &subsidy, &opts),
        Command::Sensitivity { scenario, at_time, out } => commands::sensitivity(&scenario, at_time, &out),
        Command::Sweep {
            scenario,
            param,
            values,
            opts,
        } => commands::sweep(&scenario, param.as_deref(), values, &opts),
        Command::Calibrate { target, base, opts } => commands::calibrate(target, base.as_deref(), &opts),
        Command::Validate { scenario, canonical } => commands::validate(&scenario, canonical),
    };
    match result {
        Ok(()) => ExitCode::from(error::exit::OK as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code() as u8)
        }
    }
}
