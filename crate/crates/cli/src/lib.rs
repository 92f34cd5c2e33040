//! `decoheren` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 configuration error,
//! 3 quadrature non-convergence, 4 oracle mismatch.

pub mod commands;
pub mod config;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use decoheren_core::Error as CoreError;

use commands::{execute, Command};
use config::{parse_sweep_arg, ConfigError, Format, RunConfig};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;
pub const EXIT_ORACLE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "decoheren", version, about = "Collisional decoherence of N-atom two-mode interferometers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Sweep one parameter: name=v1,v2,... (overrides [sweep]).
    #[arg(long)]
    pub sweep: Option<String>,
    /// Output file (default: [output].path, else stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write a JSON array of records instead of CSV.
    #[arg(long)]
    pub json: bool,
    /// RNG seed (overrides the config seed).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Integrate s, γ and τ for the configured environment.
    Rates(Common),
    /// ⟨O_+⟩, visibility, phase and variance.
    Observe(Common),
    /// Raw and central moments for η = 1..eta-max.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        eta_max: u32,
    },
    /// Simulated per-run counts in the configured port.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
    },
    /// Closed forms against the dense density-matrix oracle.
    OracleCheck(Common),
}

/// Exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::NonConvergent { .. } | CoreError::PvWindowSensitivity { .. } => EXIT_CONVERGENCE,
                CoreError::InvalidSpec { .. }
                | CoreError::InvalidLabel { .. }
                | CoreError::AsymmetryOutOfRange { .. }
                | CoreError::LengthMismatch { .. }
                | CoreError::UnsupportedPrep { .. }
                | CoreError::KeepExceedsAlpha { .. }
                | CoreError::OracleTooLarge { .. } => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            };
        }
    }
    EXIT_RUNTIME
}

/// Cap rayon's pool from `DECOHEREN_THREADS`.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("DECOHEREN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError(format!("DECOHEREN_THREADS must be a positive integer, got `{v}`")))?;
    // a second initialisation (tests calling run twice) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Run one invocation and return the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    init_threads()?;
    let (common, cmd) = match cli.command {
        Sub::Rates(c) => (c, Command::Rates),
        Sub::Observe(c) => (c, Command::Observe),
        Sub::Moments { common, eta_max } => (common, Command::Moments { eta_max }),
        Sub::Sample { common, runs } => (common, Command::Sample { runs }),
        Sub::OracleCheck(c) => (c, Command::OracleCheck),
    };
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = &common.sweep {
        cfg.sweep = Some(parse_sweep_arg(s)?);
    }
    let seed = common.seed.unwrap_or(cfg.seed);
    let report = execute(cmd, &cfg, seed)?;

    let json = common.json || cfg.output.format == Format::Json;
    let path = common.output.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let sink: Box<dyn Write> = match &path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if json {
        report.table.write_json(sink)?;
    } else {
        report.table.write_csv(sink)?;
    }
    for note in &report.notes {
        eprintln!("{note}");
    }
    Ok(if report.oracle_failed { EXIT_ORACLE } else { 0 })
}
