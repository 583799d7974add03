//! `vesselid`: template preparation, identification, evaluation, synthetic
//! datasets and the mission service.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 runtime error.

mod annotate;
mod commands;
mod config;
mod error;
mod frames;
mod service;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::AppConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "vesselid", version, about = "Known-target vessel identification toolkit")]
struct Cli {
    /// TOML config file; omitted sections use built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a template bundle from two background-free RGBA cutouts.
    PrepareTemplate(commands::template::Args),
    /// Identify the target among detections; NDJSON reports on stdout.
    Identify(commands::identify::Args),
    /// Detection mAP and identification confusion counts against labels.
    Evaluate(commands::evaluate::Args),
    /// Write a synthetic labeled sequence with poses and templates.
    GenDataset(commands::dataset::Args),
    /// Run the mission loop and serve the operator API.
    RunMission(commands::mission::Args),
    /// Print the effective config, defaults filled in, as TOML.
    ShowConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::PrepareTemplate(a) => commands::template::run(a, &cfg),
        Command::Identify(a) => commands::identify::run(a, &cfg),
        Command::Evaluate(a) => commands::evaluate::run(a, &cfg),
        Command::GenDataset(a) => commands::dataset::run(a),
        Command::RunMission(a) => commands::mission::run(a, &cfg),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}
