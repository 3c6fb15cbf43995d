use clap::{Parser, Subcommand};
use pinls::cli::run_command;
use pinls::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulator for the nonlinear Schrödinger equation with a point interaction
/// at the origin in two and three dimensions.
#[derive(Parser)]
#[command(name = "pinls", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file (defaults apply when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// dotted-path override, e.g. --override evolution.dt=5e-4 (repeatable)
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenpair values, Lambda table, eigen-residual and resolvent suites
    Spectrum,
    /// Nonlinear (or linear-only) time evolution with diagnostics
    Evolve,
    /// Picard fixed-point iteration and contraction ratios
    Picard,
    /// Linear dispersive-decay exponent fit
    Decay,
    /// Gagliardo-Nirenberg / embedding ratio report
    Inequalities,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::load(cli.config.as_deref(), &cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let name = match cli.command {
        Command::Spectrum => "spectrum",
        Command::Evolve => "evolve",
        Command::Picard => "picard",
        Command::Decay => "decay",
        Command::Inequalities => "inequalities",
    };
    match run_command(name, &cfg, &cli.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
