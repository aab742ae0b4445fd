//! Command-line driver for regfield sweeps.
//!
//! Exit codes: 0 all rows within thresholds, 1 threshold violation,
//! 2 configuration error, 3 non-convergence or ill-conditioned fit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_list, Overrides, RunConfig};
use regfield::report::{write_rows, Format};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<regfield::Error> for CliError {
    fn from(e: regfield::Error) -> Self {
        use regfield::Error as E;
        match e {
            E::NonConvergence { .. } | E::Conditioning(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "regfield", version, about = "Regularized point-electron field integrals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Numeric vs analytic M_n and R_n radial integrals
    Moments,
    /// Self-energies, self-force, hidden momentum, spin and mc^2
    Electron,
    /// eps- and a-scaling exponents fitted over sweeps
    Convergence,
    /// Residuals of the integration-by-parts identities
    Identities,
    /// Kernel moments and metadata
    KernelInfo,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Kernel (repeatable): gaussian[:w], compact-bump, asymmetric-bump[:s], tabulated:PATH
    #[arg(long = "kernel", global = true, value_name = "NAME")]
    pub kernels: Vec<String>,
    /// Comma-separated cutoff radii
    #[arg(long, global = true, value_name = "LIST", value_parser = parse_float_list)]
    pub a: Option<FloatList>,
    /// Comma-separated regularization widths
    #[arg(long, global = true, value_name = "LIST", value_parser = parse_float_list)]
    pub eps: Option<FloatList>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_name = "csv|json", value_parser = parse_format)]
    pub format: Option<Format>,
    /// Observables for `electron` (comma-separated, e.g. spin,U_ele)
    #[arg(long = "observable", global = true, value_name = "LIST")]
    pub observables: Vec<String>,
    /// Run (a, eps) pairs with eps > a/10; rows get an out-of-regime note
    #[arg(long, global = true)]
    pub allow_out_of_regime: bool,
    /// Omit wall-clock timing from the summary (outputs never carry timestamps)
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Evaluate sweep points on one thread
    #[arg(long, global = true)]
    pub sequential: bool,
}

/// A comma-separated list taken as one argument value.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn parse_float_list(s: &str) -> Result<FloatList, String> {
    parse_list(s).map(FloatList)
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse::<Format>().map_err(|e| e.to_string())
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            kernels: self.kernels.clone(),
            a: self.a.clone().map(|l| l.0),
            eps: self.eps.clone().map(|l| l.0),
            out: self.out.clone(),
            format: self.format,
            observables: self.observables.clone(),
            allow_out_of_regime: self.allow_out_of_regime,
            deterministic: self.deterministic,
            sequential: self.sequential,
        }
    }
}

/// Builds the effective configuration: file (or defaults) then flags.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(common.overrides());
    Ok(cfg)
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let start = Instant::now();
    let result = resolve_config(&cli.common).and_then(|cfg| {
        let outcome = commands::execute(cli.command, &cfg)?;
        emit(&outcome, &cfg)?;
        Ok((outcome, cfg))
    });
    match result {
        Ok((outcome, cfg)) => {
            let failed = outcome.failures.len();
            for f in &outcome.failures {
                eprintln!("FAIL {f}");
            }
            let mut summary = format!("{} rows, {} failed", outcome.rows.len(), failed);
            if !cfg.deterministic {
                summary.push_str(&format!(" ({:.2?})", start.elapsed()));
            }
            eprintln!("{summary}");
            if failed > 0 {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(outcome: &commands::Outcome, cfg: &RunConfig) -> Result<(), CliError> {
    let io = |e: regfield::Error| CliError::Config(format!("cannot write output: {e}"));
    match &cfg.out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
            let mut w = std::io::BufWriter::new(file);
            write_rows(&outcome.rows, cfg.format, &mut w).map_err(io)?;
            w.flush().map_err(|e| CliError::Config(e.to_string()))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_rows(&outcome.rows, cfg.format, stdout.lock()).map_err(io)?;
        }
    }
    Ok(())
}
