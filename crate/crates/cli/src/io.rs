//! Artifact reading and writing with command-level error mapping.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output { path: dir.to_path_buf(), message: e.to_string() })?;
    if !dir.is_dir() {
        return Err(CliError::Output { path: dir.to_path_buf(), message: "not a directory".into() });
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Output { path: path.to_path_buf(), message: e.to_string() })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output { path: path.to_path_buf(), message: e.to_string() })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(CliError::MissingInput(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| CliError::InvalidInput { path: path.to_path_buf(), message: e.to_string() })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::InvalidInput { path: path.to_path_buf(), message: e.to_string() })
}

/// A CSV table held as header plus string rows.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let err = |e: csv::Error| CliError::Output { path: path.to_path_buf(), message: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::Output { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CliError::MissingInput(path.to_path_buf()));
        }
        let err = |e: csv::Error| CliError::InvalidInput { path: path.to_path_buf(), message: e.to_string() };
        let mut r = csv::Reader::from_path(path).map_err(err)?;
        let header = r.headers().map_err(err)?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(err)?;
        Ok(Self { header, rows })
    }

    /// Column parsed as numbers.
    pub fn column<T: std::str::FromStr>(&self, path: &Path, idx: usize) -> Result<Vec<T>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(idx).and_then(|v| v.parse().ok()).ok_or_else(|| CliError::InvalidInput {
                    path: path.to_path_buf(),
                    message: format!("row {}: column {} is missing or not a number", i + 1, idx + 1),
                })
            })
            .collect()
    }
}

/// Shortest exact representation.
pub fn num(v: f64) -> String {
    v.to_string()
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
