//! `su3-bethe`: verification suites, exact spectra, Bethe equation solves,
//! eigenstate construction and table regeneration for the SU(3) open chain.
//!
//! Exit codes: 0 all checks pass, 1 a check failed or a computation
//! aborted, 2 usage or input error.

mod commands;
mod config;
mod report;
mod seeds;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use report::Report;
use seeds::{parse_seeds, Seed};

#[derive(Parser, Debug)]
#[command(name = "su3-bethe", version, about = "Nested off-diagonal Bethe ansatz for the SU(3) open chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Replace the threshold of every check.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    /// Seed file, one root set per line: `M; u1,…; g1,…[; E]`.
    #[arg(long, global = true, value_name = "PATH")]
    seeds: Option<PathBuf>,
    /// Add multistart seeds on a grid (solve).
    #[arg(long, global = true)]
    grid_scan: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// R-matrix, reflection, commutativity and vacuum identities.
    Verify,
    /// Exact diagonalization of the Hamiltonian.
    Spectrum,
    /// Refine seeds (and grid-scan seeds) into Bethe root sets.
    Solve,
    /// Build the Bethe eigenstate of one root set.
    State,
    /// Regenerate the bundled reference tables.
    Reproduce,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("su3-bethe: {msg}");
    ExitCode::from(2)
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load(cli: &Cli) -> Result<(RunConfig, Vec<Seed>), String> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::parse(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => RunConfig::default(),
    };
    let seeds = match &cli.seeds {
        Some(p) => parse_seeds(&read(p)?, cfg.params.eta).map_err(|e| format!("{}: {e}", p.display()))?,
        None => Vec::new(),
    };
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(format!("--tol must be a nonnegative number, got {t}"));
        }
    }
    match cli.command {
        Command::Solve if seeds.is_empty() && !cli.grid_scan => {
            Err("solve needs a nonempty --seeds file or --grid-scan".into())
        }
        Command::State if seeds.len() > 1 => Err(format!("state takes one root set, the seed file has {}", seeds.len())),
        Command::State if seeds.is_empty() && cfg.options.row.is_none() => {
            Err("state needs --seeds or a 'row' config key".into())
        }
        Command::Spectrum if !cfg.params.is_homogeneous() => Err("spectrum requires theta = 0".into()),
        _ => Ok((cfg, seeds)),
    }
}

fn run(cli: &Cli, cfg: &RunConfig, seeds: &[Seed]) -> su3_bethe::Result<Report> {
    match cli.command {
        Command::Verify => commands::verify(cfg),
        Command::Spectrum => commands::spectrum_cmd(cfg),
        Command::Solve => commands::solve(cfg, seeds, cli.grid_scan),
        Command::State => commands::state(cfg, seeds.first()),
        Command::Reproduce => commands::reproduce(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, seeds) = match load(&cli) {
        Ok(x) => x,
        Err(e) => return usage_error(e),
    };
    let start = Instant::now();
    let mut report = match run(&cli, &cfg, &seeds) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("su3-bethe: {e}");
            return ExitCode::from(1);
        }
    };
    report.wall_time = start.elapsed().as_secs_f64();
    if let Some(t) = cli.tol {
        report.override_thresholds(t);
    }
    let text = match cli.format {
        Format::Json => report.render_json(),
        Format::Csv => match report.render_csv() {
            Ok(s) => s,
            Err(e) => {
                eprintln!("su3-bethe: {e}");
                return ExitCode::from(1);
            }
        },
    };
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                return usage_error(format!("cannot write {}: {e}", p.display()));
            }
        }
        None => print!("{text}"),
    }
    for c in report.failed_checks() {
        eprintln!("FAIL {}: residual {:e} > threshold {:e}", c.name, c.residual, c.threshold);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
