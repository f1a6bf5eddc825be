use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial non-linearity applied to a window-to-center distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFunction {
    /// `exp(-d / eta)` on the raw distance, or `exp(-d² / (2 eta))` when
    /// `squared` is set (the form the composite-kernel identity assumes).
    GaussianDecay {
        eta: f64,
        #[serde(default)]
        squared: bool,
    },
    /// `ρ^k` for odd `k`, `ρ^k ln ρ` for even `k` (0 at ρ = 0).
    PolyharmonicSpline { order: u32 },
}

impl Default for BasisFunction {
    fn default() -> Self {
        BasisFunction::GaussianDecay { eta: 1.0, squared: false }
    }
}

impl BasisFunction {
    pub fn gaussian(eta: f64) -> Self {
        BasisFunction::GaussianDecay { eta, squared: false }
    }

    pub fn squared_exponential(eta: f64) -> Self {
        BasisFunction::GaussianDecay { eta, squared: true }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisFunction::GaussianDecay { eta, .. } if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::InvalidParameter(format!("length-scale eta must be positive, got {eta}")))
            }
            BasisFunction::PolyharmonicSpline { order: 0 } => {
                Err(Error::InvalidParameter("polyharmonic order must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Activation for a validated basis; callers on hot paths validate once.
    #[inline]
    pub fn apply(&self, dist: f64) -> f64 {
        match *self {
            BasisFunction::GaussianDecay { eta, squared: false } => (-dist / eta).exp(),
            BasisFunction::GaussianDecay { eta, squared: true } => (-dist * dist / (2.0 * eta)).exp(),
            BasisFunction::PolyharmonicSpline { order } => {
                if dist == 0.0 {
                    return 0.0;
                }
                let p = dist.powi(order as i32);
                if order % 2 == 1 {
                    p
                } else {
                    p * dist.ln()
                }
            }
        }
    }

    pub fn activation(&self, dist: f64) -> Result<f64> {
        self.validate()?;
        if !(dist >= 0.0) {
            return Err(Error::InvalidParameter(format!("distance must be non-negative, got {dist}")));
        }
        Ok(self.apply(dist))
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        match *self {
            BasisFunction::GaussianDecay { squared, .. } => BasisFunction::GaussianDecay { eta, squared },
            other => other,
        }
    }
}
