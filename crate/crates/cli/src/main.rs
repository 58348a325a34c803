//! `mixspread`: price spread options under normal mixture models from a
//! TOML configuration.

mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixspread::tables::TableSet;
use mixspread::MgfKind;

use config::{Format, Overrides, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "mixspread", version, about = "Moment-matching spread option pricer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Mgf used by the proxy and the pricing formulas.
    #[arg(long, global = true, value_parser = parse_mgf)]
    mgf: Option<MgfKind>,
    /// Monte Carlo path count.
    #[arg(long, global = true, value_name = "COUNT")]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true, value_name = "REAL")]
    tol: Option<f64>,
    /// Overrides `contract.strike`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    strike: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate price of the configured contract.
    Price,
    /// Reproduce a reference table: approximation, simulation and published values per cell.
    Table {
        #[arg(value_parser = clap::value_parser!(u32).range(1..))]
        id: u32,
        /// Table data file replacing the built-in one.
        #[arg(long, value_name = "PATH")]
        tables: Option<PathBuf>,
    },
    /// Monte Carlo price of the configured contract.
    Mc,
    /// Raw moments of the spread and every mgf argument used.
    Moments,
    /// Moment-matching solver report.
    Solve,
}

fn parse_mgf(s: &str) -> Result<MgfKind, String> {
    match s {
        "exact" => Ok(MgfKind::Exact),
        "truncated" => Ok(MgfKind::Truncated),
        _ => Err(format!("expected 'exact' or 'truncated', got '{s}'")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        mgf: c.mgf,
        n: c.n,
        seed: c.seed,
        format: c.format,
        tol: c.tol,
        strike: c.strike,
    });

    // Buffered so a failing command prints nothing partial.
    let mut buf = Vec::new();
    match &cli.command {
        Command::Price => commands::price(&cfg, &mut buf)?,
        Command::Mc => commands::mc(&cfg, &mut buf)?,
        Command::Moments => commands::moments(&cfg, &mut buf)?,
        Command::Solve => commands::solve(&cfg, &mut buf)?,
        Command::Table { id, tables } => {
            let set = match tables {
                Some(p) => TableSet::load(p)?,
                None => TableSet::builtin(),
            };
            commands::table(&cfg, &set, *id, &mut buf)?
        }
    }
    std::io::stdout().lock().write_all(&buf)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
