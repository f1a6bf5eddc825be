//! Gaussian kernel density estimates with a rule-of-thumb bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `0.9 · min(sd, IQR / 1.34) · n^{-1/5}`, falling back to whichever spread
/// is nonzero.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    };
    let iqr = (q(0.75) - q(0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return Err(Error::Degenerate("all samples identical".into())),
    };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKde {
    samples: Vec<f64>,
    bandwidth: f64,
}

/// Density evaluated on a grid, with the bandwidth rule named.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub bandwidth_rule: String,
}

impl GaussianKde {
    pub fn silverman(samples: &[f64]) -> Result<Self> {
        Ok(Self { samples: samples.to_vec(), bandwidth: silverman_bandwidth(samples)? })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (self.samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        norm * self.samples.iter().map(|s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum::<f64>()
    }

    /// Evaluates on `points` equally spaced values spanning the samples
    /// padded by three bandwidths.
    pub fn estimate(&self, points: usize) -> KdeEstimate {
        let lo = self.samples.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * self.bandwidth;
        let hi = self.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * self.bandwidth;
        let points = points.max(2);
        let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
        let density = grid.iter().map(|&x| self.density(x)).collect();
        KdeEstimate { grid, density, bandwidth: self.bandwidth, bandwidth_rule: "silverman".into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_hand_case() {
        // sd = sqrt(2.5), IQR/1.34 = 2/1.34
        let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let expect = 0.9 * 2.5f64.sqrt().min(2.0 / 1.34) * 5f64.powf(-0.2);
        assert!((h - expect).abs() < 1e-12);
        assert!(silverman_bandwidth(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let kde = GaussianKde::silverman(&[0.0, 0.5, 2.0, 2.2, 3.0]).unwrap();
        let est = kde.estimate(2001);
        let dx = est.grid[1] - est.grid[0];
        let mass: f64 = est.density.iter().sum::<f64>() * dx;
        assert!((mass - 1.0).abs() < 5e-3);
        assert_eq!(est.bandwidth_rule, "silverman");
    }
}
