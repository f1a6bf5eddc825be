//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Cholesky factorization with a descriptive error.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(format!("{what}: non-finite entries")));
    }
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Cholesky that symmetrizes first and retries once with `1e-9 * trace / D`
/// added to the diagonal.
pub fn cholesky_repaired(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, Cholesky<f64, Dyn>)> {
    let sym = symmetrize(m);
    if let Ok(c) = cholesky(&sym, what) {
        return Ok((sym, c));
    }
    let d = sym.nrows().max(1) as f64;
    let jitter = 1e-9 * sym.trace().abs().max(f64::MIN_POSITIVE) / d;
    let repaired = &sym + DMatrix::identity(sym.nrows(), sym.ncols()) * jitter;
    let c = cholesky(&repaired, what)?;
    Ok((repaired, c))
}

pub fn log_det_from_cholesky(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Numerically stable `log(sum(exp(xs)))`; `-inf` for an empty or all `-inf` slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Softmax of log-scores, computed by shifting with the log-normalizer.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let z = logsumexp(scores);
    scores.iter().map(|s| (s - z).exp()).collect()
}

/// Precomputed multivariate normal log-density terms for a fixed covariance.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    cov: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianNoise {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        let c = cholesky(&cov, "noise covariance")?;
        let d = cov.nrows() as f64;
        let log_norm = -0.5 * (d * LN_2PI + log_det_from_cholesky(&c));
        Ok(Self { chol_l: c.l(), cov, log_norm })
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn chol_l(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    /// log N(residual | 0, cov).
    pub fn log_density(&self, residual: &[f64]) -> f64 {
        let d = residual.len();
        if d == 1 {
            let l = self.chol_l[(0, 0)];
            let u = residual[0] / l;
            return self.log_norm - 0.5 * u * u;
        }
        // forward substitution L u = residual
        let mut u = vec![0.0; d];
        for i in 0..d {
            let mut acc = residual[i];
            for j in 0..i {
                acc -= self.chol_l[(i, j)] * u[j];
            }
            u[i] = acc / self.chol_l[(i, i)];
        }
        self.log_norm - 0.5 * u.iter().map(|v| v * v).sum::<f64>()
    }

    /// Σ⁻¹ r, used for score/gradient checks.
    pub fn precision_times(&self, residual: &DVector<f64>) -> DVector<f64> {
        let c = Cholesky::new(self.cov.clone()).expect("validated at construction");
        c.solve(residual)
    }
}
