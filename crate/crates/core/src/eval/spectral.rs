//! Spectral summary features of a single segment.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::ar_psd;

/// Alpha band in Hz, inclusive.
pub const ALPHA_BAND: (f64, f64) = (8.0, 13.0);

const MIN_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralEstimator {
    /// Hann-windowed periodogram.
    Periodogram,
    /// Yule-Walker AR fit of the given order, evaluated on the periodogram grid.
    Autoregressive { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatures {
    /// Hz.
    pub fundamental_frequency: f64,
    /// Shannon entropy of the normalized spectrum divided by ln(#bins).
    pub spectral_entropy: f64,
    /// Fraction of power in [8, 13] Hz.
    pub alpha_band_energy: f64,
}

impl SpectralFeatures {
    const DEGENERATE: Self = Self { fundamental_frequency: 0.0, spectral_entropy: 0.0, alpha_band_energy: 0.0 };
}

fn hann_periodogram(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            Complex::new(v * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}

/// Levinson-Durbin on the biased autocovariance.
fn yule_walker(x: &[f64], order: usize) -> Option<(Vec<f64>, f64)> {
    let n = x.len();
    let acov: Vec<f64> = (0..=order).map(|k| (k..n).map(|t| x[t] * x[t - k]).sum::<f64>() / n as f64).collect();
    let mut a: Vec<f64> = Vec::with_capacity(order);
    let mut err = acov[0];
    for k in 1..=order {
        let mut acc = acov[k];
        for j in 1..k {
            acc -= a[j - 1] * acov[k - j];
        }
        let refl = acc / err;
        let prev = a.clone();
        for j in 1..k {
            a[j - 1] = prev[j - 1] - refl * prev[k - j - 1];
        }
        a.push(refl);
        err *= 1.0 - refl * refl;
        if !(err > 0.0) {
            return None;
        }
    }
    Some((a, err))
}

/// Features of the mean-removed segment. A constant segment returns zeros.
pub fn spectral_features(segment: &[f64], sampling_rate: f64, estimator: SpectralEstimator) -> Result<SpectralFeatures> {
    if segment.len() < MIN_LEN {
        return Err(Error::InsufficientData { needed: MIN_LEN, got: segment.len() });
    }
    if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling rate must be positive, got {sampling_rate}")));
    }
    if segment.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("segment contains non-finite values".into()));
    }
    let n = segment.len();
    let mean = segment.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = segment.iter().map(|v| v - mean).collect();
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale <= 1e-12 * mean.abs().max(1.0) {
        return Ok(SpectralFeatures::DEGENERATE);
    }
    let x: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let bins = n / 2 + 1;
    let freqs: Vec<f64> = (0..bins).map(|k| k as f64 * sampling_rate / n as f64).collect();
    let power = match estimator {
        SpectralEstimator::Periodogram => hann_periodogram(&x),
        SpectralEstimator::Autoregressive { order } => {
            let (a, var) = yule_walker(&x, order.max(1)).ok_or_else(|| Error::Degenerate("AR spectral fit".into()))?;
            let norm: Vec<f64> = (0..bins).map(|k| k as f64 / n as f64).collect();
            ar_psd(&a, var, &norm)?
        }
    };
    let total: f64 = power.iter().sum();
    if !(total > 0.0) {
        return Ok(SpectralFeatures::DEGENERATE);
    }
    let peak = (0..bins).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
    let entropy = -power
        .iter()
        .map(|p| p / total)
        .filter(|p| *p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
        / (bins as f64).ln();
    let alpha: f64 = freqs
        .iter()
        .zip(&power)
        .filter(|(f, _)| **f >= ALPHA_BAND.0 && **f <= ALPHA_BAND.1)
        .map(|(_, p)| p)
        .sum::<f64>()
        / total;
    Ok(SpectralFeatures { fundamental_frequency: freqs[peak], spectral_entropy: entropy, alpha_band_energy: alpha })
}
