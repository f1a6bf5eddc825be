//! Command-line experiments for the `rbfihmm` library: synthetic switching
//! data, unsupervised segmentation fits, few-shot seizure classification,
//! metrics and run reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "rbfihmm", version, about = "Sticky HDP-HMM with RBF autoregressive emissions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores); overrides `run.threads`.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Generate a switching RBF-AR series with its true state sequence.
    Synth,
    /// Fit the configured model families to a series.
    Fit,
    /// Run the training-fraction sweep of the two-class classifier.
    Classify,
    /// Compute metrics from the artifacts in the output directory.
    Eval,
    /// Aggregate the output directory into report.md.
    Report,
}

/// Config file plus flag overrides.
pub fn resolve(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.run.out = o.to_string_lossy().into_owned();
    }
    if let Some(t) = common.threads {
        cfg.run.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<String> {
    let out = commands::prepare(cfg)?;
    match command {
        Command::Synth => commands::synth::run(cfg, &out),
        Command::Fit => commands::fit::run(cfg, &out),
        Command::Classify => commands::classify::run(cfg, &out),
        Command::Eval => commands::eval::run(cfg, &out),
        Command::Report => commands::report::run(cfg, &out),
    }
}
