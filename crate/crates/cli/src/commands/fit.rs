use std::path::{Path, PathBuf};

use rbfihmm::hdp::{fit, FitResult};
use rbfihmm::rng::sub_rng;
use rbfihmm::series::LaggedData;
use serde::{Deserialize, Serialize};

use super::synth::{read_series, write_states, SERIES_FILE};
use super::{family_artifact, stream};
use crate::config::{RunConfig, FAMILIES};
use crate::error::Result;
use crate::io::{num, write_json, write_text, Table};
use crate::svg;

/// Point estimate of one fitted family, labels in occupancy order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitArtifact {
    pub family: String,
    pub lag: usize,
    pub truncation: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub retained_samples: usize,
    pub point_estimate_sweep: usize,
    pub joint_log_likelihood: f64,
    pub occupied_states: usize,
    pub occupancy: Vec<usize>,
    pub beta: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    pub states: Vec<StateSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateSummary {
    pub state: usize,
    pub occupancy: usize,
    /// D×J, row-major.
    pub weights: Vec<Vec<f64>>,
    /// D×D, row-major.
    pub noise_cov: Vec<Vec<f64>>,
    /// Empty for the linear family.
    pub centers: Vec<Vec<f64>>,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

pub fn series_path(cfg: &RunConfig, out: &Path) -> PathBuf {
    if cfg.run.series.is_empty() {
        out.join(SERIES_FILE)
    } else {
        PathBuf::from(&cfg.run.series)
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<String> {
    let series = read_series(&series_path(cfg, out))?;
    let data = LaggedData::build(&series, cfg.model.lag)?;
    let var = series.variance_per_dim().iter().sum::<f64>() / series.dim() as f64;
    let prior = cfg.model.prior(var)?;
    let gibbs = cfg.sampler.gibbs();
    let mut lines = Vec::new();
    for name in &cfg.model.families {
        let family = cfg.model.family(name, &data, var.sqrt())?;
        let tag = FAMILIES.iter().position(|f| f == name).unwrap_or(FAMILIES.len()) as u64;
        let mut rng = sub_rng(cfg.run.seed, &[stream::FIT, tag]);
        let result = fit(&data, &prior, &family, &gibbs, &mut rng)?;
        let artifact = write_fit(name, &result, cfg, out)?;
        lines.push(format!(
            "fit {name}: K+ = {}, best joint log-likelihood {:.1} at sweep {}",
            artifact.occupied_states, artifact.joint_log_likelihood, artifact.point_estimate_sweep
        ));
    }
    Ok(lines.join("\n"))
}

fn write_fit(name: &str, result: &FitResult, cfg: &RunConfig, out: &Path) -> Result<FitArtifact> {
    let best = &result.point_estimate;
    let state = best.relabeled(&best.canonical_order())?;
    let occupancy = state.occupancy();
    let states = (0..state.states())
        .filter(|&k| occupancy[k] > 0)
        .map(|k| {
            let e = &state.emissions[k];
            StateSummary {
                state: k,
                occupancy: occupancy[k],
                weights: rows(e.weights()),
                noise_cov: rows(e.noise_cov()),
                centers: e.rbf_layer().map(|l| l.centers().to_vec()).unwrap_or_default(),
            }
        })
        .collect();
    let artifact = FitArtifact {
        family: name.to_string(),
        lag: cfg.model.lag,
        truncation: cfg.model.truncation,
        sweeps: cfg.sampler.sweeps,
        burn_in: cfg.sampler.burn_in,
        retained_samples: result.samples.len(),
        point_estimate_sweep: result.point_estimate_sweep,
        joint_log_likelihood: result.log_lik_trace[result.point_estimate_sweep],
        occupied_states: result.occupied_states,
        occupancy: occupancy.clone(),
        beta: state.beta.clone(),
        pi: state.pi.clone(),
        states,
    };
    write_json(&family_artifact(out, "fit", name, "json"), &artifact)?;
    write_states(&state.z, cfg.model.lag, &family_artifact(out, "states", name, "csv"))?;

    let mut trace = Table::new(&["sweep [index]", "joint_log_likelihood [nats]", "retained [bool]"]);
    let retained: std::collections::BTreeSet<usize> = result.samples.iter().map(|s| s.sweep).collect();
    for (i, ll) in result.log_lik_trace.iter().enumerate() {
        trace.push(vec![i.to_string(), num(*ll), retained.contains(&i).to_string()]);
    }
    trace.write(&family_artifact(out, "trace", name, "csv"))?;

    // occupied block of Π
    let occ: Vec<usize> = (0..occupancy.len()).filter(|&k| occupancy[k] > 0).collect();
    let block: Vec<Vec<f64>> = occ.iter().map(|&i| occ.iter().map(|&j| state.pi[i][j]).collect()).collect();
    let title = format!("{name}: estimated transition matrix (occupied states)");
    write_text(&family_artifact(out, "pi", name, "svg"), &svg::heatmap(&block, &title))?;
    Ok(artifact)
}
