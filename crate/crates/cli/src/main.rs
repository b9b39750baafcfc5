//! `rbctrl`: train, verify and analyse reduced-basis models of the
//! benchmark control problems.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 greedy did not
//! converge, 4 numerical failure, 5 file error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbctrl::Error;

use commands::Status;
use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "rbctrl", version, about = "Reduced-basis greedy training for parametrized optimal control")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sweep threads; 1 is the bit-reproducible reference mode.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, env = "RBCTRL_OUT_DIR", default_value = "rbctrl-out")]
    out: PathBuf,

    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the greedy algorithm and save the basis, snapshots and trace.
    Train,
    /// Evaluate a saved basis on a fresh verification set.
    Verify {
        /// Basis file; defaults to `<out>/basis.json`.
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Full and, given a basis, reduced inf-sup constants over sampled parameters.
    Infsup {
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Run an experiment grid and write the report tables.
    Bench,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain { .. } | Error::UnknownStrategy { .. } | Error::FingerprintMismatch { .. } => 2,
        Error::Singular { .. } | Error::Numerical(_) | Error::Shape { .. } => 4,
        Error::Io { .. } | Error::Json(_) | Error::Csv(_) => 5,
    }
}

fn run(cli: &Cli) -> Result<Status, Error> {
    let overrides = Overrides {
        seed: cli.seed,
        threads: cli.threads,
    };
    let config = RunConfig::load(cli.config.as_deref(), overrides)?;
    match &cli.command {
        Command::Train => commands::train(&config, &cli.out),
        Command::Verify { basis } => {
            let path = basis.clone().unwrap_or_else(|| cli.out.join(commands::BASIS_FILE));
            commands::verify_basis(&config, &path, &cli.out)
        }
        Command::Infsup { basis } => commands::infsup(&config, basis.as_deref(), &cli.out),
        Command::Bench => commands::bench(&config, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(3),
        Ok(Status::CellErrors) => ExitCode::from(4),
        Err(e) => {
            eprintln!("rbctrl: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
