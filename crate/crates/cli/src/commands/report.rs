use std::fmt::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::eval::{Metrics, METRICS_FILE};
use super::CONFIG_FILE;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{read_json, read_text, write_text};

pub const REPORT_FILE: &str = "report.md";

/// Summarizes every artifact in the run directory into `report.md`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<String> {
    let mut doc = String::new();
    let _ = writeln!(doc, "# Run report\n");
    let _ = writeln!(doc, "Seed: {}\n", cfg.run.seed);

    let metrics_path = out.join(METRICS_FILE);
    if metrics_path.exists() {
        let m: Metrics = read_json(&metrics_path)?;
        if !m.segmentation.is_empty() {
            let _ = writeln!(doc, "## Segmentation\n");
            let _ = writeln!(doc, "| family | z accuracy | transition MSE | K+ | unmatched observations |");
            let _ = writeln!(doc, "|---|---|---|---|---|");
            for (family, s) in &m.segmentation {
                let _ = writeln!(doc, "| {family} | {:.4} | {:.3e} | {} | {} |", s.z_accuracy, s.transition_mse, s.occupied_states, s.unmatched_occupancy);
            }
            doc.push('\n');
        }
        if !m.classification.is_empty() {
            let _ = writeln!(doc, "## Classification (mean balanced accuracy)\n");
            let fractions: Vec<f64> = m.classification.values().next().map(|v| v.iter().map(|f| f.fraction).collect()).unwrap_or_default();
            let _ = writeln!(doc, "| model | {} |", fractions.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" | "));
            let _ = writeln!(doc, "|---|{}", "---|".repeat(fractions.len()));
            for (name, means) in &m.classification {
                let cells: Vec<String> = means.iter().map(|f| f.mean_balanced_accuracy.map(|a| format!("{a:.3}")).unwrap_or_else(|| "skipped".into())).collect();
                let _ = writeln!(doc, "| {name} | {} |", cells.join(" | "));
            }
            doc.push('\n');
        }
    } else {
        let _ = writeln!(doc, "No metrics.json in this directory; run `eval` first for metric tables.\n");
    }

    let mut entries: Vec<_> = std::fs::read_dir(out)
        .map_err(|e| CliError::InvalidInput { path: out.to_path_buf(), message: e.to_string() })?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().to_string())
        .filter(|n| n != REPORT_FILE)
        .collect();
    entries.sort();

    let figures: Vec<&String> = entries.iter().filter(|n| n.ends_with(".svg")).collect();
    if !figures.is_empty() {
        let _ = writeln!(doc, "## Figures\n");
        for f in figures {
            let _ = writeln!(doc, "![{f}]({f})\n");
        }
    }

    let _ = writeln!(doc, "## Artifacts\n");
    let _ = writeln!(doc, "| file | bytes | sha256 |");
    let _ = writeln!(doc, "|---|---|---|");
    for name in &entries {
        let bytes = std::fs::read(out.join(name)).map_err(|e| CliError::InvalidInput { path: out.join(name), message: e.to_string() })?;
        let _ = writeln!(doc, "| {name} | {} | `{}` |", bytes.len(), hex::encode(Sha256::digest(&bytes)));
    }
    doc.push('\n');

    let config = read_text(&out.join(CONFIG_FILE))?;
    let _ = writeln!(doc, "## Resolved configuration\n\n```toml\n{}```", config);
    write_text(&out.join(REPORT_FILE), &doc)?;
    Ok(format!("report: {} artifacts summarized in {}", entries.len(), out.join(REPORT_FILE).display()))
}
