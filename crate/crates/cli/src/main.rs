//! `ris-align`: outage curves, patterns, series and multi-access budgets
//! from the command line.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CliError;

#[derive(Debug, Parser)]
#[command(name = "ris-align", version, about = "RIS phase-alignment experiments")]
struct Cli {
    /// Worker threads for Monte Carlo runs. Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Outage probability against per-branch SNR.
    Outage(commands::OutageArgs),
    /// Outage of a scanned surface seen from off-target angles.
    SweepAngle(commands::SweepArgs),
    /// Array factor or Woodward flat-top pattern over u in [-1, 1].
    Pattern(commands::PatternArgs),
    /// Laplace and Maclaurin coefficients near the origin.
    Series(commands::SeriesArgs),
    /// Closed-form and sampled moments of |H|.
    Moments(commands::MomentsArgs),
    /// Multi-access minimum power budgets from a JSON request.
    MaBudget(commands::MaArgs),
    /// Minimum angular spacing between NOMA users.
    Spacing(commands::SpacingArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Outage(a) => commands::outage(a),
        Command::SweepAngle(a) => commands::sweep_angle(a),
        Command::Pattern(a) => commands::pattern(a),
        Command::Series(a) => commands::series(a),
        Command::Moments(a) => commands::moments(a),
        Command::MaBudget(a) => commands::ma_budget(a),
        Command::Spacing(a) => commands::spacing(a),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, matching the config-error code.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) | Err(CliError::PipeClosed) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
