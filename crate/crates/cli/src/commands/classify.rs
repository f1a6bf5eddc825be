use std::path::Path;

use rbfihmm::classifier::{mean_by_fraction, run_split_sweep, subject_split, threshold_sweep, SegmentDataset, SweepRow, NEGATIVE, POSITIVE};
use rbfihmm::eval::{confidence_histogram, spectral_features, ConfidenceHistogram, GaussianKde, KdeEstimate, SpectralEstimator};
use rbfihmm::rng::{sub_rng, sub_seed};
use serde::{Deserialize, Serialize};

use super::stream;
use crate::config::{ClassifierModel, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_uci_eeg, ValidationReport};
use crate::io::{num, opt_num, write_json, write_text, Table};
use crate::svg;

pub const CLASSIFICATION_FILE: &str = "classification.json";
pub const HISTOGRAMS_FILE: &str = "histograms.json";
pub const FEATURES_FILE: &str = "features.json";
pub const CURVE_FILE: &str = "accuracy_curve.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetInfo {
    /// `uci` or `synthetic`.
    pub source: String,
    pub segments: usize,
    pub positive_segments: usize,
    pub subjects: usize,
    pub held_out_subjects: Vec<u32>,
    pub validation_segments: usize,
    pub sampling_rate: f64,
    pub validation_report: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FractionMean {
    pub fraction: f64,
    pub mean_balanced_accuracy: Option<f64>,
    pub completed_repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelSweep {
    pub name: String,
    pub rows: Vec<SweepRow>,
    pub means: Vec<FractionMean>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassificationArtifact {
    pub dataset: DatasetInfo,
    pub protocol_seed: u64,
    pub models: Vec<ModelSweep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
struct HistogramEntry {
    model: String,
    fraction: f64,
    /// Classes without validation examples; their mass is null.
    empty_classes: Vec<usize>,
    histogram: ConfidenceHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
struct FeatureDensity {
    feature: String,
    unit: String,
    /// Indexed by class: non-seizure, seizure. `None` when a class has too
    /// few finite values for a bandwidth.
    densities: Vec<Option<KdeEstimate>>,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<(SegmentDataset, String, Option<ValidationReport>)> {
    let c = &cfg.classify;
    if c.dataset.is_empty() {
        let mut rng = sub_rng(cfg.run.seed, &[stream::CLASSIFY_DATA]);
        return Ok((c.synthetic.generate(&mut rng), "synthetic".into(), None));
    }
    let id = (!c.id_column.is_empty()).then_some(c.id_column.as_str());
    let ds = ingest_uci_eeg(Path::new(&c.dataset), &c.label_column, id)?;
    let report = ds.report();
    Ok((ds.to_segments(), "uci".into(), Some(report)))
}

fn estimator(cfg: &RunConfig) -> SpectralEstimator {
    match cfg.classify.spectral_ar_order {
        0 => SpectralEstimator::Periodogram,
        order => SpectralEstimator::Autoregressive { order },
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<String> {
    let c = &cfg.classify;
    let (dataset, source, report) = load_dataset(cfg)?;
    dataset.validate()?;
    let mut lines = Vec::new();
    if let Some(r) = &report {
        lines.push(format!(
            "dataset: {} rows, seizure {}, non-seizure {}, {} subjects ({})",
            r.rows, r.seizure_rows, r.non_seizure_rows, r.subjects, r.subject_source
        ));
    }
    let protocol = c.protocol(sub_seed(cfg.run.seed, &[stream::CLASSIFY_PROTOCOL]));
    let split = subject_split(&dataset, &protocol)?;
    let info = DatasetInfo {
        source,
        segments: dataset.segments.len(),
        positive_segments: dataset.labels.iter().filter(|&&l| l == POSITIVE).count(),
        subjects: dataset.subject_ids().len(),
        held_out_subjects: split.held_out.clone(),
        validation_segments: split.validation.len(),
        sampling_rate: dataset.sampling_rate,
        validation_report: report.map(|r| serde_json::to_value(r).expect("report serializes")),
    };

    let mut sweeps = Vec::new();
    let mut histograms = Vec::new();
    let mut curve = Vec::new();
    let steps = c.threshold_steps;
    let thresholds: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    for model in &c.models {
        let rows = run_split_sweep(&dataset, &protocol, &c.model_config(model))?;
        write_sweep_table(&rows, &out.join(format!("sweep_{}.csv", model.name)))?;

        let mut thr = Table::new(&["fraction [1]", "threshold [1]", "balanced_accuracy [1]", "positive_recall [1]", "negative_recall [1]"]);
        for &f in &c.fractions {
            let pooled: Vec<(f64, usize)> = rows.iter().filter(|r| r.fraction == f).flat_map(|r| r.confidences.iter().cloned()).collect();
            if pooled.is_empty() {
                continue;
            }
            let (conf, truth): (Vec<f64>, Vec<usize>) = pooled.iter().cloned().unzip();
            let hist = confidence_histogram(&conf, &truth, 2, c.histogram_bins)?;
            histograms.push(HistogramEntry { model: model.name.clone(), fraction: f, empty_classes: hist.empty_classes(), histogram: hist });
            for p in threshold_sweep(&pooled, &thresholds) {
                thr.push(vec![num(f), num(p.threshold), num(p.balanced_accuracy), opt_num(p.positive_recall), opt_num(p.negative_recall)]);
            }
        }
        thr.write(&out.join(format!("thresholds_{}.csv", model.name)))?;

        let means: Vec<FractionMean> = mean_by_fraction(&rows)
            .into_iter()
            .map(|(fraction, mean, completed)| FractionMean { fraction, mean_balanced_accuracy: mean, completed_repeats: completed })
            .collect();
        curve.push((model.name.clone(), means.iter().filter_map(|m| m.mean_balanced_accuracy.map(|a| (m.fraction, a))).collect()));
        lines.push(summary_line(model, &means));
        sweeps.push(ModelSweep { name: model.name.clone(), rows, means });
    }

    write_json(&out.join(HISTOGRAMS_FILE), &histograms)?;
    if let Some(h) = histograms.iter().find(|h| h.empty_classes.is_empty()) {
        let groups: Vec<(String, Vec<f64>)> = [(NEGATIVE, "non-seizure"), (POSITIVE, "seizure")]
            .iter()
            .filter_map(|&(c, name)| h.histogram.mass[c].clone().map(|m| (name.to_string(), m)))
            .collect();
        let title = format!("{}: seizure confidence at training fraction {}", h.model, h.fraction);
        write_text(&out.join("confidence_histogram.svg"), &svg::histogram(&h.histogram.edges, &groups, &title, "seizure confidence"))?;
    }
    write_text(&out.join(CURVE_FILE), &svg::line_chart(&curve, "Balanced accuracy vs training fraction", "training fraction", "balanced accuracy", true))?;
    write_json(&out.join(FEATURES_FILE), &feature_densities(&dataset, cfg)?)?;
    write_json(&out.join(CLASSIFICATION_FILE), &ClassificationArtifact { dataset: info, protocol_seed: protocol.seed, models: sweeps })?;
    Ok(lines.join("\n"))
}

fn summary_line(model: &ClassifierModel, means: &[FractionMean]) -> String {
    let parts: Vec<String> = means
        .iter()
        .map(|m| match m.mean_balanced_accuracy {
            Some(a) => format!("{}: {a:.3}", m.fraction),
            None => format!("{}: skipped", m.fraction),
        })
        .collect();
    format!("classify {}: {}", model.name, parts.join(", "))
}

fn write_sweep_table(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut t = Table::new(&[
        "fraction [1]",
        "repeat [index]",
        "balanced_accuracy [1]",
        "skipped",
        "train_negative [segments]",
        "train_positive [segments]",
        "validation_segments [segments]",
        "train_hash [hex]",
    ]);
    for r in rows {
        t.push(vec![
            num(r.fraction),
            r.repeat.to_string(),
            opt_num(r.balanced_accuracy),
            r.skipped.clone().unwrap_or_default(),
            r.train_negative.to_string(),
            r.train_positive.to_string(),
            r.validation_segments.to_string(),
            format!("{:016x}", r.train_hash),
        ]);
    }
    t.write(path)
}

/// Per-class kernel densities of the three spectral features.
fn feature_densities(dataset: &SegmentDataset, cfg: &RunConfig) -> Result<Vec<FeatureDensity>> {
    let est = estimator(cfg);
    let mut values = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
    for (seg, &label) in dataset.segments.iter().zip(&dataset.labels) {
        let f = match spectral_features(seg, dataset.sampling_rate, est) {
            Ok(f) => f,
            Err(rbfihmm::Error::InsufficientData { .. }) => continue,
            Err(e) => return Err(CliError::Model(e)),
        };
        values[0][label].push(f.fundamental_frequency);
        values[1][label].push(f.spectral_entropy);
        values[2][label].push(f.alpha_band_energy);
    }
    let names = [("fundamental_frequency", "Hz"), ("spectral_entropy", "normalized nats"), ("alpha_band_energy", "fraction of power")];
    Ok(names
        .iter()
        .zip(values.iter())
        .map(|(&(feature, unit), per_class)| FeatureDensity {
            feature: feature.into(),
            unit: unit.into(),
            densities: per_class
                .iter()
                .map(|v| GaussianKde::silverman(v).ok().map(|k| k.estimate(cfg.classify.kde_points)))
                .collect(),
        })
        .collect())
}
