//! Subcommand implementations. Each writes its artifacts plus the resolved
//! `config.toml` into the output directory.

pub mod classify;
pub mod eval;
pub mod fit;
pub mod report;
pub mod synth;

use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{ensure_dir, write_text};

/// Sub-stream tags mixed into the run seed, one per consumer.
pub(crate) mod stream {
    pub const SYNTH: u64 = 1;
    pub const FIT: u64 = 2;
    pub const CLASSIFY_DATA: u64 = 3;
    pub const CLASSIFY_PROTOCOL: u64 = 4;
}

pub const CONFIG_FILE: &str = "config.toml";

/// Creates the output directory and records the resolved configuration.
pub fn prepare(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let out = PathBuf::from(&cfg.run.out);
    ensure_dir(&out)?;
    write_text(&out.join(CONFIG_FILE), &cfg.to_toml()?)?;
    Ok(out)
}

pub(crate) fn family_artifact(dir: &Path, prefix: &str, family: &str, ext: &str) -> PathBuf {
    dir.join(format!("{prefix}_{family}.{ext}"))
}
