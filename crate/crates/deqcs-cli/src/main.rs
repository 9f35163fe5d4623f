//! `deqcs` — config-driven experiment runner for equilibrium-network
//! compressed-sensing channel estimation.
//!
//! Subcommands: `generate`, `train`, `evaluate`, `sweep`, `theory`, `sgf`,
//! `assumptions`, `sparsity`. Every run reads an INI-style config
//! (`--config`), honors `--seed` / `--out` / `--snr-db` overrides, writes
//! its outputs plus a `manifest.json` with content fingerprints, and reruns
//! bit-identically for identical (config, seed).
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure.

mod config;
mod csvout;
mod error;
mod experiments;
mod manifest;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigMap;
use error::{cfg_err, CliError};
use experiments::common::Overrides;

#[derive(Parser)]
#[command(
    name = "deqcs",
    version,
    about = "Equilibrium-network compressed-sensing experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment configuration (INI-style `key = value` under [sections]).
    /// Omitted: documented defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's `[experiment] seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Comma-separated SNR list in dB; overrides the config's grid.
    #[arg(long = "snr-db", global = true, value_name = "LIST")]
    snr_db: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic sparse-channel dataset file.
    Generate,
    /// Train an equilibrium network (unsupervised or supervised loss).
    Train,
    /// Evaluate methods at fixed SNR points, or run the risk-unbiasedness
    /// study (`[experiment] kind = gsure_unbiasedness`).
    Evaluate,
    /// Mean-NMSE-versus-SNR table across methods.
    Sweep,
    /// Sparsity-level and error-gap bounds report.
    Theory,
    /// Sparse-growth-function curves (brute force, numeric, closed form).
    Sgf,
    /// Operating-constant estimates per SNR.
    Assumptions,
    /// Output ℓ₁/ℓ₂ sparsity trends per SNR.
    Sparsity,
}

fn parse_snr_list(s: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(
            part.parse::<f64>()
                .map_err(|_| cfg_err(format!("--snr-db: '{part}' is not a number")))?,
        );
    }
    if out.is_empty() {
        return Err(cfg_err("--snr-db: empty list"));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
            ConfigMap::parse(&text)?
        }
        None => ConfigMap::default(),
    };
    let ov = Overrides {
        seed: cli.seed,
        snr_db: cli.snr_db.as_deref().map(parse_snr_list).transpose()?,
    };
    fs::create_dir_all(&cli.out)
        .map_err(|e| cfg_err(format!("cannot create {}: {e}", cli.out.display())))?;
    let out = cli.out.as_path();
    match cli.cmd {
        Cmd::Generate => experiments::generate::run(&mut cfg, &ov, out),
        Cmd::Train => experiments::train::run(&mut cfg, &ov, out),
        Cmd::Evaluate => experiments::evaluate::run(&mut cfg, &ov, out),
        Cmd::Sweep => experiments::sweep::run(&mut cfg, &ov, out),
        Cmd::Theory => experiments::theory::run(&mut cfg, &ov, out),
        Cmd::Sgf => experiments::sgf::run(&mut cfg, &ov, out),
        Cmd::Assumptions => experiments::assumptions::run(&mut cfg, &ov, out),
        Cmd::Sparsity => experiments::sparsity::run(&mut cfg, &ov, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
