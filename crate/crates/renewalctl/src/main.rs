//! Command-line front end for the renewal harvesting solver: solve a scenario
//! at concrete control values, reconstruct the profit polynomial, maximize it
//! over the control box, or re-run the packaged examples against their
//! recorded reference values.
//!
//! Exit codes: 0 on success, 2 for input that does not parse, 3 for a
//! numerical failure, 4 for a filesystem problem. `RENEWALCTL_THREADS` caps
//! the number of worker threads for concurrent solves (default: all cores).

mod commands;
mod fail;
mod report;
mod scenario_file;

use clap::{Args, Parser, Subcommand};
use fail::{CliResult, Failure};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "renewalctl",
    version,
    about = "Solve, fit and maximize harvesting profits for an age-structured renewal model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once at concrete control values and write totals and traces
    Solve {
        #[command(flatten)]
        io: IoArgs,
        /// Eta values, one per piece, comma separated (overrides the file)
        #[arg(long, value_delimiter = ',')]
        eta: Option<Vec<f64>>,
        /// Retention values, one per sell age (or per fitted piece), comma separated
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
    },
    /// Reconstruct the profit polynomial from structured sample solves
    Fit {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Fit the polynomial, then maximize it over the control box
    Optimize {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Grid points per axis for the interior search
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Re-run a packaged example and compare against recorded reference values
    Reproduce {
        /// Which table to reproduce
        #[arg(value_enum)]
        target: commands::ReproduceTarget,
        /// Optional directory for the table as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct IoArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for CSV files
    #[arg(long)]
    out: PathBuf,
    /// Override the time step
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// Fit family; defaults to the natural one for the layout
    #[arg(long, value_enum)]
    mode: Option<commands::FitModeArg>,
    /// Per-variable degree bound for total-degree fits
    #[arg(long)]
    degree: Option<u32>,
}

fn thread_cap() -> CliResult<usize> {
    match std::env::var("RENEWALCTL_THREADS") {
        Ok(s) => s.trim().parse::<usize>().map_err(|_| {
            Failure::Parse(format!("RENEWALCTL_THREADS = {s:?} is not a thread count"))
        }),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = thread_cap()?;
    match cli.command {
        Command::Solve { io, eta, theta } => {
            commands::cmd_solve(&io.scenario, &io.out, io.dt, eta, theta)
        }
        Command::Fit { io, fit } => {
            commands::cmd_fit(&io.scenario, &io.out, io.dt, fit.mode, fit.degree, threads)
        }
        Command::Optimize { io, fit, grid } => commands::cmd_optimize(
            &io.scenario,
            &io.out,
            io.dt,
            fit.mode,
            fit.degree,
            grid,
            threads,
        ),
        Command::Reproduce { target, out } => {
            commands::cmd_reproduce(target, out.as_deref(), threads)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        eprintln!("{failure}");
        std::process::exit(failure.exit_code());
    }
}
