//! `finiteband construct|verify|sample --config <path> --out <dir>`

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "finiteband", version, about = "Reflectionless finite-band matrix potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write potential.csv, pencils.json and metadata.json.
    Construct(Common),
    /// Check the identity ledger on constructed files and write report.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Directory holding potential.csv and pencils.json (defaults to --out).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Write green.csv, density.csv, xi.csv and discriminant.csv.
    Sample(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Tolerance override, repeatable: --tol ledger_tol=1e-9
    #[arg(long = "tol", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn configure_threads() {
    if let Some(n) = std::env::var("FINITEBAND_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (common, input) = match &cli.command {
        Command::Construct(c) | Command::Sample(c) => (c, None),
        Command::Verify { common, input } => (common, input.clone()),
    };
    let text = io::read(&common.config)?;
    let cfg = config::parse(&text, &common.tol, common.seed)?;
    match cli.command {
        Command::Construct(_) => commands::construct(&cfg, &common.out),
        Command::Verify { .. } => commands::verify(&cfg, input.as_deref().unwrap_or(&common.out), &common.out),
        Command::Sample(_) => commands::sample(&cfg, &common.out),
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
