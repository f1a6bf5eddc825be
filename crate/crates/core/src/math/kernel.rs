use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Parameters of the composite covariance of a Bayesian RBF network with
/// squared-exponential basis `exp(-‖y-c‖²/(2η))` and centers `c ~ N(0, σ_c² I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeKernelParams {
    pub sigma_c2: f64,
    pub eta: f64,
}

impl CompositeKernelParams {
    pub fn new(sigma_c2: f64, eta: f64) -> Result<Self> {
        if !(sigma_c2 > 0.0 && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "center variance and length-scale must be positive (got {sigma_c2}, {eta})"
            )));
        }
        Ok(Self { sigma_c2, eta })
    }

    /// Envelope variance `2σ_c² + η`.
    pub fn envelope_var(&self) -> f64 {
        2.0 * self.sigma_c2 + self.eta
    }

    /// Stationary-part variance `2η + η²/σ_c²`.
    pub fn kernel_var(&self) -> f64 {
        2.0 * self.eta + self.eta * self.eta / self.sigma_c2
    }

    /// Kernel value with the proportionality constant fixed to one, so
    /// `value(0, 0) == 1` and only ratios are meaningful.
    pub fn value(&self, y: &[f64], y_prime: &[f64]) -> Result<f64> {
        check_len(y.len(), y_prime.len())?;
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let pp: f64 = y_prime.iter().map(|v| v * v).sum();
        let dd: f64 = y.iter().zip(y_prime).map(|(a, b)| (a - b) * (a - b)).sum();
        let env = self.envelope_var();
        let ker = self.kernel_var();
        Ok((-yy / (2.0 * env) - dd / (2.0 * ker) - pp / (2.0 * env)).exp())
    }
}
