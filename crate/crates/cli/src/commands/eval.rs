use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rbfihmm::eval::{matched_state_accuracy, transition_mse};
use serde::{Deserialize, Serialize};

use super::classify::{ClassificationArtifact, FractionMean, CLASSIFICATION_FILE};
use super::fit::FitArtifact;
use super::synth::{read_ground_truth, read_states, GROUND_TRUTH_FILE, TRUTH_FILE};
use super::family_artifact;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{num, read_json, write_json, Table};

pub const METRICS_FILE: &str = "metrics.json";

/// Segmentation quality of one fitted family against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SegmentationMetrics {
    pub z_accuracy: f64,
    pub transition_mse: f64,
    pub occupied_states: usize,
    pub true_states: usize,
    /// Observations in inferred states without a true partner.
    pub unmatched_occupancy: usize,
    /// Inferred label → matched true label.
    pub assignment: Vec<Option<usize>>,
    pub compared_observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub seed: u64,
    /// Primary family's matched state accuracy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_accuracy: Option<f64>,
    /// Primary family's transition-matrix MSE.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primary_family: Option<String>,
    pub segmentation: BTreeMap<String, SegmentationMetrics>,
    /// Mean balanced accuracy per training fraction, per classifier model.
    pub classification: BTreeMap<String, Vec<FractionMean>>,
}

pub fn segmentation_metrics(fit: &FitArtifact, inferred: &[(usize, usize)], truth: &[(usize, usize)], actual_pi: &[Vec<f64>]) -> Result<SegmentationMetrics> {
    let by_time: HashMap<usize, usize> = truth.iter().cloned().collect();
    let (z_hat, z_true): (Vec<usize>, Vec<usize>) = inferred.iter().filter_map(|&(t, k)| by_time.get(&t).map(|&s| (k, s))).unzip();
    if z_hat.is_empty() {
        return Err(CliError::Config("inferred and true state sequences share no time index".into()));
    }
    let m = matched_state_accuracy(&z_hat, &z_true)?;
    let mse = transition_mse(&fit.pi, actual_pi, &m)?;
    Ok(SegmentationMetrics {
        z_accuracy: m.accuracy,
        transition_mse: mse,
        occupied_states: fit.occupied_states,
        true_states: actual_pi.len(),
        unmatched_occupancy: m.unmatched_occupancy,
        assignment: m.assignment,
        compared_observations: z_hat.len(),
    })
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<String> {
    let mut metrics = Metrics {
        seed: cfg.run.seed,
        z_accuracy: None,
        transition_mse: None,
        primary_family: None,
        segmentation: BTreeMap::new(),
        classification: BTreeMap::new(),
    };
    let truth_path = out.join(TRUTH_FILE);
    let classification_path = out.join(CLASSIFICATION_FILE);
    if !truth_path.exists() && !classification_path.exists() {
        return Err(CliError::MissingInput(truth_path));
    }
    let mut lines = Vec::new();
    if truth_path.exists() {
        let truth = read_states(&truth_path)?;
        let spec = read_ground_truth(&out.join(GROUND_TRUTH_FILE))?;
        let mut table1 = Table::new(&["family", "z_accuracy [1]", "transition_mse [1]", "occupied_states [count]", "unmatched_occupancy [observations]"]);
        for family in &cfg.model.families {
            let fit: FitArtifact = read_json(&family_artifact(out, "fit", family, "json"))?;
            let inferred = read_states(&family_artifact(out, "states", family, "csv"))?;
            let m = segmentation_metrics(&fit, &inferred, &truth, &spec.transition)?;
            table1.push(vec![
                family.clone(),
                num(m.z_accuracy),
                num(m.transition_mse),
                m.occupied_states.to_string(),
                m.unmatched_occupancy.to_string(),
            ]);
            lines.push(format!("eval {family}: zAccuracy {:.4}, transitionMse {:.3e}, K+ {}", m.z_accuracy, m.transition_mse, m.occupied_states));
            metrics.segmentation.insert(family.clone(), m);
        }
        table1.write(&out.join("table1.csv"))?;
        let primary = &metrics.segmentation[&cfg.model.primary];
        metrics.z_accuracy = Some(primary.z_accuracy);
        metrics.transition_mse = Some(primary.transition_mse);
        metrics.primary_family = Some(cfg.model.primary.clone());
    }
    if classification_path.exists() {
        let art: ClassificationArtifact = read_json(&classification_path)?;
        let mut table2 = Table::new(&["model", "fraction [1]", "mean_balanced_accuracy [1]", "completed_repeats [count]"]);
        for m in art.models {
            for f in &m.means {
                table2.push(vec![m.name.clone(), num(f.fraction), f.mean_balanced_accuracy.map(num).unwrap_or_default(), f.completed_repeats.to_string()]);
            }
            metrics.classification.insert(m.name, m.means);
        }
        table2.write(&out.join("table2.csv"))?;
        lines.push(format!("eval: classification summary for {} models", metrics.classification.len()));
    }
    write_json(&out.join(METRICS_FILE), &metrics)?;
    Ok(lines.join("\n"))
}
