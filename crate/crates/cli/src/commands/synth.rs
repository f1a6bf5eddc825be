use std::path::Path;

use rbfihmm::rng::sub_rng;
use rbfihmm::series::TimeSeries;
use rbfihmm::synth::SynthOutput;

use super::stream;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{num, read_json, write_json, Table};

pub const SERIES_FILE: &str = "series.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

pub fn run(cfg: &RunConfig, out: &Path) -> Result<String> {
    let mut rng = sub_rng(cfg.run.seed, &[stream::SYNTH]);
    let output = cfg.synth.generate(&mut rng)?;
    write_series(&output.series, &out.join(SERIES_FILE))?;
    write_states(&output.z_true, output.spec.lag, &out.join(TRUTH_FILE))?;
    write_json(&out.join(GROUND_TRUTH_FILE), &output.spec)?;
    Ok(summary(&output))
}

fn summary(o: &SynthOutput) -> String {
    format!("synth: {} samples, {} states, lag {}", o.series.len(), o.spec.states.len(), o.spec.lag)
}

pub fn write_series(series: &TimeSeries, path: &Path) -> Result<()> {
    let mut header = vec!["t [sample]".to_string()];
    header.extend((0..series.dim()).map(|d| format!("y{d} [a.u.]")));
    let mut table = Table { header, rows: Vec::with_capacity(series.len()) };
    for t in 0..series.len() {
        let mut row = vec![t.to_string()];
        row.extend(series.row(t).iter().map(|v| num(*v)));
        table.push(row);
    }
    table.write(path)
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let table = Table::read(path)?;
    let dim = table.header.len().saturating_sub(1);
    if dim == 0 {
        return Err(CliError::InvalidInput { path: path.to_path_buf(), message: "series needs a time column and at least one value column".into() });
    }
    let mut values = Vec::with_capacity(table.rows.len() * dim);
    for d in 0..dim {
        let col: Vec<f64> = table.column(path, d + 1)?;
        if d == 0 {
            values.resize(col.len() * dim, 0.0);
        }
        for (t, v) in col.into_iter().enumerate() {
            values[t * dim + d] = v;
        }
    }
    Ok(TimeSeries::new(values, dim)?)
}

/// State sequence aligned to lagged targets: entry `i` is time `lag + i`.
pub fn write_states(z: &[usize], lag: usize, path: &Path) -> Result<()> {
    let mut table = Table::new(&["t [sample]", "state [index]"]);
    for (i, k) in z.iter().enumerate() {
        table.push(vec![(lag + i).to_string(), k.to_string()]);
    }
    table.write(path)
}

/// `(time, state)` pairs.
pub fn read_states(path: &Path) -> Result<Vec<(usize, usize)>> {
    let table = Table::read(path)?;
    let t: Vec<usize> = table.column(path, 0)?;
    let z: Vec<usize> = table.column(path, 1)?;
    Ok(t.into_iter().zip(z).collect())
}

pub fn read_ground_truth(path: &Path) -> Result<rbfihmm::synth::SynthSpec> {
    read_json(path)
}
