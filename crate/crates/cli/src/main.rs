//! `qflow`: run, verify and sweep discrete Morse flows.
//!
//! Exit status is 0 when everything requested passed, 1 when a check failed
//! or the solver did not converge, and 2 for configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "qflow", version, about = "Discrete Morse flow for Q-valued functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow and write energy.csv, snapshots/, domain.json and run.json.
    Run(Common),
    /// Run the property suites and flow checks; write verify.json.
    Verify(Common),
    /// Heat-limit error table over `sweep_h` x `sweep_resolutions`.
    Sweep(Common),
    /// Evaluate the implicit-Euler oracle against the exact decay.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled checks, overrides `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps
    #[arg(long)]
    jobs: Option<usize>,
    /// Only run the named check (repeatable)
    #[arg(long = "check")]
    checks: Vec<String>,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config::ConfigError::new("config", format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.jobs == Some(0) {
        return Err(config::ConfigError::new("jobs", "must be at least 1").into());
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Run(c) => {
            let mut cfg = load(&c)?;
            if !c.checks.is_empty() {
                cfg.checks = Some(c.checks.clone());
                cfg.validate()?;
            }
            commands::cmd_run(&cfg)
        }
        Command::Verify(c) => commands::cmd_verify(&load(&c)?, &c.checks),
        Command::Sweep(c) => commands::cmd_sweep(&load(&c)?, c.jobs),
        Command::Oracle(c) => commands::cmd_oracle(&load(&c)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("qflow: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("qflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
