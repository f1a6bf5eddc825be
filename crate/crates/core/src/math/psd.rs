use std::f64::consts::PI;

use crate::error::{Error, Result};

/// AR spectral density `σ² / |1 - Σ_j A_j e^{-i2πfj}|²` at normalized
/// frequencies `f` (cycles per sample).
pub fn ar_psd(coeffs: &[f64], noise_var: f64, freqs: &[f64]) -> Result<Vec<f64>> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance must be positive, got {noise_var}")));
    }
    Ok(freqs
        .iter()
        .map(|&f| {
            let (mut re, mut im) = (1.0, 0.0);
            for (j, a) in coeffs.iter().enumerate() {
                let w = 2.0 * PI * f * (j + 1) as f64;
                re -= a * w.cos();
                im += a * w.sin();
            }
            noise_var / (re * re + im * im)
        })
        .collect())
}
