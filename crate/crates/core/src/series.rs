//! Observation sequences and their lagged (autoregressive) design.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// T×D real-valued observations stored row-major, with optional sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    dim: usize,
    pub sampling_rate: Option<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("series dimension must be positive".into()));
        }
        if values.len() % dim != 0 {
            return Err(Error::Dimension { expected: dim, got: values.len() % dim });
        }
        Ok(Self { values, dim, sampling_rate: None })
    }

    pub fn univariate(values: Vec<f64>) -> Self {
        Self { values, dim: 1, sampling_rate: None }
    }

    pub fn with_sampling_rate(mut self, hz: f64) -> Self {
        self.sampling_rate = Some(hz);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values of one channel.
    pub fn channel(&self, d: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.values[t * self.dim + d]).collect()
    }

    pub fn variance_per_dim(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|d| {
                let c = self.channel(d);
                let m = c.iter().sum::<f64>() / n;
                c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
            })
            .collect()
    }
}

/// The r most recent observations before a target, most recent first:
/// `[y_{t-1}, y_{t-2}, …, y_{t-r}]`, flattened to length `r·D`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedWindow {
    values: Vec<f64>,
    lag: usize,
    dim: usize,
}

impl LaggedWindow {
    pub fn new(values: Vec<f64>, lag: usize, dim: usize) -> Result<Self> {
        if lag == 0 || dim == 0 {
            return Err(Error::InvalidParameter("lag and dimension must be positive".into()));
        }
        if values.len() != lag * dim {
            return Err(Error::Dimension { expected: lag * dim, got: values.len() });
        }
        Ok(Self { values, lag, dim })
    }

    /// Builds from an r×D matrix given as rows, most recent first.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension { expected: dim, got: rows.iter().map(Vec::len).find(|l| *l != dim).unwrap_or(0) });
        }
        Self::new(rows.concat(), rows.len(), dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Observation `y_{t-1-k}`.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }
}

/// Targets and lagged windows for a series: target `i` is observation
/// `i + r`, window `i` holds observations `i + r - 1` down to `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedData {
    targets: Vec<f64>,
    windows: Vec<f64>,
    dim: usize,
    lag: usize,
}

impl LaggedData {
    pub fn build(series: &TimeSeries, lag: usize) -> Result<Self> {
        if lag == 0 {
            return Err(Error::InvalidParameter("lag must be at least 1".into()));
        }
        let t_len = series.len();
        if t_len <= lag {
            return Err(Error::InsufficientData { needed: lag, got: t_len });
        }
        let dim = series.dim();
        let n = t_len - lag;
        let mut targets = Vec::with_capacity(n * dim);
        let mut windows = Vec::with_capacity(n * lag * dim);
        for i in 0..n {
            targets.extend_from_slice(series.row(i + lag));
            for k in 0..lag {
                windows.extend_from_slice(series.row(i + lag - 1 - k));
            }
        }
        Ok(Self { targets, windows, dim, lag })
    }

    /// Assembles from parts; used when windows come from several segments.
    pub fn from_parts(targets: Vec<f64>, windows: Vec<f64>, dim: usize, lag: usize) -> Result<Self> {
        let n = targets.len() / dim.max(1);
        if targets.len() != n * dim || windows.len() != n * lag * dim {
            return Err(Error::Dimension { expected: n * lag * dim, got: windows.len() });
        }
        Ok(Self { targets, windows, dim, lag })
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn width(&self) -> usize {
        self.lag * self.dim
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.dim..(i + 1) * self.dim]
    }

    pub fn window(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.windows[i * w..(i + 1) * w]
    }

    pub fn window_owned(&self, i: usize) -> LaggedWindow {
        LaggedWindow { values: self.window(i).to_vec(), lag: self.lag, dim: self.dim }
    }

    pub fn windows(&self) -> Vec<LaggedWindow> {
        (0..self.len()).map(|i| self.window_owned(i)).collect()
    }

    /// Targets as an N×D row list.
    pub fn targets(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.target(i).to_vec()).collect()
    }

    /// Restriction to the given indices, in order.
    pub fn subset(&self, idx: &[usize]) -> LaggedData {
        let mut targets = Vec::with_capacity(idx.len() * self.dim);
        let mut windows = Vec::with_capacity(idx.len() * self.width());
        for &i in idx {
            targets.extend_from_slice(self.target(i));
            windows.extend_from_slice(self.window(i));
        }
        LaggedData { targets, windows, dim: self.dim, lag: self.lag }
    }

    /// Concatenates lagged data sets with identical shape.
    pub fn concat(parts: &[LaggedData]) -> Result<LaggedData> {
        let first = parts.first().ok_or_else(|| Error::Empty("no lagged data to concatenate".into()))?;
        let (dim, lag) = (first.dim, first.lag);
        let mut targets = Vec::new();
        let mut windows = Vec::new();
        for p in parts {
            if p.dim != dim || p.lag != lag {
                return Err(Error::Dimension { expected: lag * dim, got: p.lag * p.dim });
            }
            targets.extend_from_slice(&p.targets);
            windows.extend_from_slice(&p.windows);
        }
        Ok(LaggedData { targets, windows, dim, lag })
    }

    /// Mean of the given windows (all windows when `idx` is `None`).
    pub fn mean_window(&self, idx: Option<&[usize]>) -> Vec<f64> {
        let w = self.width();
        let mut acc = vec![0.0; w];
        let mut count = 0usize;
        let mut add = |i: usize| {
            for (a, v) in acc.iter_mut().zip(self.window(i)) {
                *a += v;
            }
            count += 1;
        };
        match idx {
            Some(ix) => ix.iter().for_each(|&i| add(i)),
            None => (0..self.len()).for_each(add),
        }
        if count > 0 {
            acc.iter_mut().for_each(|a| *a /= count as f64);
        }
        acc
    }

    /// Variance of window entries pooled over all coordinates.
    pub fn pooled_window_variance(&self, idx: Option<&[usize]>) -> f64 {
        let mean = self.mean_window(idx);
        let all: Vec<usize> = (0..self.len()).collect();
        let ix = idx.unwrap_or(&all);
        if ix.is_empty() {
            return 0.0;
        }
        let mut acc = 0.0;
        for &i in ix {
            acc += self.window(i).iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>();
        }
        acc / (ix.len() * mean.len()) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_enumerated_lags() {
        let s = TimeSeries::univariate(vec![1.0, 2.0, 3.0, 4.0]);
        let l = LaggedData::build(&s, 2).unwrap();
        assert_eq!(l.targets(), vec![vec![3.0], vec![4.0]]);
        assert_eq!(l.window(0), &[2.0, 1.0]);
        assert_eq!(l.window(1), &[3.0, 2.0]);
    }

    #[test]
    fn too_short() {
        let s = TimeSeries::univariate(vec![1.0, 2.0]);
        assert!(matches!(LaggedData::build(&s, 2), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn multivariate_shape() {
        let s = TimeSeries::new((0..10).map(f64::from).collect(), 2).unwrap();
        let l = LaggedData::build(&s, 3).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.window(0).len(), 6);
        // most recent first: rows 2, 1, 0
        assert_eq!(l.window(0), &[4.0, 5.0, 2.0, 3.0, 0.0, 1.0]);
        let w = l.window_owned(0);
        assert_eq!(w.step(0), &[4.0, 5.0]);
        assert_eq!(w.step(2), &[0.0, 1.0]);
    }

    #[test]
    fn subset_and_mean() {
        let s = TimeSeries::univariate(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let l = LaggedData::build(&s, 1).unwrap();
        let sub = l.subset(&[0, 3]);
        assert_eq!(sub.targets(), vec![vec![2.0], vec![5.0]]);
        assert_eq!(l.mean_window(Some(&[0, 3])), vec![2.5]);
        assert_eq!(l.mean_window(None), vec![2.5]);
    }
}
