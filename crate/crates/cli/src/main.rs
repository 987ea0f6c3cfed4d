//! `quasiwkb` command-line front end.
//!
//! Exit codes: 0 on success, 2 when the configuration is rejected, 3 when a
//! solver fails. `QUASIWKB_WORKERS` sets the size of the worker pool.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};

use crate::commands::{Common, CommonArgs};
use crate::config::{config_err, CliError, ConfigLayer};

#[derive(Parser, Debug)]
#[command(name = "quasiwkb", version, about = "Quasi-adiabatic WKB dynamics of the two-level Grover search problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trajectories of several backends on a common r grid (CSV)
    Dynamics(commands::DynamicsArgs),
    /// Final ground-state population over a list of total times
    Sweep(commands::SweepArgs),
    /// Threshold times for each (n, alpha, backend) cell
    Threshold(commands::ThresholdCmdArgs),
    /// Exponent of the threshold time in n from a least-squares fit
    Scaling(commands::ScalingArgs),
    /// Norms and time-averaged distances to the exact solution per schedule
    Compare(commands::CompareArgs),
}

const WORKERS_ENV: &str = "QUASIWKB_WORKERS";

fn configure_workers() -> Result<(), CliError> {
    let Ok(text) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| config_err(format!("{WORKERS_ENV} must be a positive integer, got '{text}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().map_err(config_err)
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_workers()?;
    let common_args: &CommonArgs = match &cli.command {
        Command::Dynamics(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Threshold(a) => &a.common,
        Command::Scaling(a) => &a.common,
        Command::Compare(a) => &a.common,
    };
    let layer = ConfigLayer::load(common_args.config.as_deref())?;
    let common = Common::resolve(common_args, &layer)?;
    let report = match &cli.command {
        Command::Dynamics(a) => commands::dynamics(a, &layer, &common)?,
        Command::Sweep(a) => commands::sweep(a, &layer, &common)?,
        Command::Threshold(a) => commands::threshold(a, &layer, &common)?,
        Command::Scaling(a) => commands::scaling(a, &layer, &common)?,
        Command::Compare(a) => commands::compare(a, &layer, &common)?,
    };
    output::emit(&report, common.json.as_deref(), common.csv.as_deref())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("quasiwkb: {e}");
        std::process::exit(e.exit_code());
    }
}
