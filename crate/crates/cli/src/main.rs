//! `fracsemi <command> --config <path> [--output <dir>]`
//!
//! Exit status: 0 on success, 2 when a run completes but a checked property
//! fails, 1 on errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use serde_json::json;

use config::Command;
use output::Artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliCommand {
    /// Use the `command` field of the config.
    Run,
    Kernel,
    Evolve,
    Decay,
    Audit,
    VerifySuite,
}

#[derive(Debug, Parser)]
#[command(
    name = "fracsemi",
    version,
    about = "Fractional Schrödinger semigroup experiments"
)]
struct Cli {
    #[arg(value_enum)]
    command: CliCommand,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn configure_threads() -> Result<usize> {
    if let Ok(raw) = std::env::var("FRACSEMI_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .with_context(|| format!("FRACSEMI_THREADS = {raw:?}: expected a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot size the thread pool")?;
    }
    Ok(rayon::current_num_threads())
}

fn run(cli: Cli) -> Result<bool> {
    let threads = configure_threads()?;
    let (cfg, raw) = config::load(&cli.config)?;
    let command = match (cli.command, cfg.command) {
        (CliCommand::Run, Some(c)) => c,
        (CliCommand::Run, None) => bail!(
            "`fracsemi run` needs config field `command`: kernel | evolve | decay | audit | verify-suite"
        ),
        (CliCommand::Kernel, _) => Command::Kernel,
        (CliCommand::Evolve, _) => Command::Evolve,
        (CliCommand::Decay, _) => Command::Decay,
        (CliCommand::Audit, _) => Command::Audit,
        (CliCommand::VerifySuite, _) => Command::VerifySuite,
    };
    let dir = cli
        .output
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("fracsemi-out"));
    let mut out = Artifacts::create(&dir)?;
    let outcome = match command {
        Command::Kernel => commands::kernel(&cfg, &mut out),
        Command::Evolve => commands::evolve_cmd(&cfg, &mut out),
        Command::Decay => commands::decay(&cfg, &mut out),
        Command::Audit => commands::audit(&cfg, &mut out),
        Command::VerifySuite => commands::verify_suite(&cfg, &mut out),
    }
    .with_context(|| format!("{} failed", command.name()))?;
    out.report(command.name(), outcome.report)?;
    out.manifest(json!({
        "command": command.name(),
        "config_path": cli.config.display().to_string(),
        "inputs": raw,
        "code_version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "property_ok": outcome.property_ok,
        "files": out.files(),
        "tolerances": tolerances(&cfg),
    }))?;
    Ok(outcome.property_ok)
}

fn tolerances(cfg: &config::ExperimentConfig) -> serde_json::Value {
    use fracsemi::{decay, kernels::ProfileChecks, linalg, subordinator};
    let checks = ProfileChecks::default();
    json!({
        "decay_threshold": cfg.threshold.unwrap_or(decay::DECAY_THRESHOLD),
        "fit_min_r_squared": decay::MIN_R_SQUARED,
        "flat_trace_tolerance": decay::FLAT_TOLERANCE,
        "dense_cap": linalg::DENSE_CAP,
        "inverse_power_tol": linalg::INVERSE_POWER_TOL,
        "subordinator_mass_tol": subordinator::MASS_TOLERANCE,
        "subordinator_clamp_mass_tol": subordinator::CLAMP_MASS_TOLERANCE,
        "kernel_max_spectral_residual": checks.max_spectral_residual,
        "kernel_max_tail_mass": checks.max_tail_mass,
        "picard_tol": cfg.engine.picard_tol,
        "splitting_dt": cfg.engine.dt,
        "contraction_tol": commands::CONTRACTION_TOL,
        "positivity_tol": commands::POSITIVITY_TOL,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("property check failed; see report.json");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
