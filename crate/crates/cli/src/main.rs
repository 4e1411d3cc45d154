//! `semcom`: power allocation for semantic communication links.
//!
//! Three subcommands: `allocate` solves one instance and prints a summary,
//! `experiment` runs the Monte Carlo sweeps from the config and writes CSV
//! tables, `validate` runs the built-in oracle suites.
//!
//! Exit codes: 0 success, 1 validation or infeasibility, 2 usage, 3 I/O.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use commands::CliError;
use semcom_core::alloc::Method;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "semcom", version, about = "Semantic-aware power allocation toolkit")]
struct Cli {
    /// JSON configuration file; omitted means the bundled defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one allocation instance and print the result.
    Allocate {
        /// Perception target P̄ (smaller is stricter).
        #[arg(long)]
        pbar: f64,
        /// Allocation method to run.
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Seed for the channel draw (ignored with --fixed-gains).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated per-stream |h|² values, bypassing the fading draw.
        #[arg(long, value_name = "g1,g2")]
        fixed_gains: Option<String>,
    },
    /// Run experiment blocks from the config and write CSV tables.
    Experiment {
        /// Name of one experiment block; omitted runs every block.
        #[arg(long)]
        name: Option<String>,
        /// Output directory for CSV files and the manifest.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run the built-in oracle suites and report pass/fail.
    Validate {
        /// Run a single suite instead of all of them.
        #[arg(long)]
        suite: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Unaware,
    Proportional,
    Bisection,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Unaware => vec![Method::Unaware],
            MethodArg::Proportional => vec![Method::Proportional],
            MethodArg::Bisection => vec![Method::Bisection],
            MethodArg::All => Method::ALL.to_vec(),
        }
    }
}

fn parse_gains(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            let trimmed = part.trim();
            trimmed
                .parse::<f64>()
                .map_err(|_| {
                    CliError::Validation(format!("--fixed-gains: {trimmed:?} is not a number"))
                })
                .and_then(|v| {
                    if v > 0.0 {
                        Ok(v)
                    } else {
                        Err(CliError::Validation(format!(
                            "--fixed-gains: gain {v} must be positive"
                        )))
                    }
                })
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (config, config_text) = commands::load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Allocate {
            pbar,
            method,
            seed,
            fixed_gains,
        } => {
            let gains = fixed_gains.as_deref().map(parse_gains).transpose()?;
            commands::cmd_allocate(&config, pbar, &method.methods(), seed, gains.as_deref())
        }
        Command::Experiment { name, out } => {
            commands::cmd_experiment(&config, &config_text, name.as_deref(), &out)
        }
        Command::Validate { suite } => commands::cmd_validate(&config, suite.as_deref()),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
