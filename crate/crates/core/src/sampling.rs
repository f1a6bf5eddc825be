//! Random variate generators: matrix normal, inverse-Wishart (Bartlett),
//! Dirichlet (log-space gamma) and categorical draws from log-weights.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, symmetrize};

/// Law of a D×J matrix with separable row (D×D) and column (J×J) covariance.
/// An all-zero covariance is read as a point mass at the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixNormalParams {
    pub mean: DMatrix<f64>,
    pub row_cov: DMatrix<f64>,
    pub col_cov: DMatrix<f64>,
}

impl MatrixNormalParams {
    pub fn new(mean: DMatrix<f64>, row_cov: DMatrix<f64>, col_cov: DMatrix<f64>) -> Result<Self> {
        let p = Self { mean, row_cov, col_cov };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (d, j) = self.mean.shape();
        if self.row_cov.shape() != (d, d) {
            return Err(Error::Dimension { expected: d, got: self.row_cov.nrows() });
        }
        if self.col_cov.shape() != (j, j) {
            return Err(Error::Dimension { expected: j, got: self.col_cov.nrows() });
        }
        if !self.is_point_mass() {
            cholesky(&self.row_cov, "matrix-normal row covariance")?;
            cholesky(&self.col_cov, "matrix-normal column covariance")?;
        }
        Ok(())
    }

    fn is_point_mass(&self) -> bool {
        self.row_cov.iter().all(|v| *v == 0.0) || self.col_cov.iter().all(|v| *v == 0.0)
    }
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // column-major fill order, fixed for reproducibility
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `mean + chol(row) · Z · chol(col)ᵀ` with i.i.d. standard normal `Z`.
pub fn sample_matrix_normal<R: Rng + ?Sized>(params: &MatrixNormalParams, rng: &mut R) -> Result<DMatrix<f64>> {
    params.validate()?;
    if params.is_point_mass() {
        return Ok(params.mean.clone());
    }
    let (d, j) = params.mean.shape();
    let a = cholesky(&params.row_cov, "matrix-normal row covariance")?.l();
    let b = cholesky(&params.col_cov, "matrix-normal column covariance")?.l();
    let z = standard_normal_matrix(d, j, rng);
    Ok(&params.mean + a * z * b.transpose())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseWishartParams {
    pub dof: f64,
    pub scale: DMatrix<f64>,
}

impl InverseWishartParams {
    pub fn new(dof: f64, scale: DMatrix<f64>) -> Result<Self> {
        let p = Self { dof, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.scale.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if !(self.dof > d as f64 - 1.0) {
            return Err(Error::InvalidParameter(format!(
                "inverse-Wishart dof {} must exceed D - 1 = {}",
                self.dof,
                d as f64 - 1.0
            )));
        }
        cholesky(&self.scale, "inverse-Wishart scale").map(|_| ())
    }

    /// `scale / (dof - D - 1)`, defined for `dof > D + 1`.
    pub fn mean(&self) -> Option<DMatrix<f64>> {
        let denom = self.dof - self.dim() as f64 - 1.0;
        (denom > 0.0).then(|| &self.scale / denom)
    }
}

/// Bartlett draw. With `scale = U Uᵀ` and Bartlett factor `A` of a
/// standard Wishart, the inverse-Wishart draw is `(U A⁻ᵀ)(U A⁻ᵀ)ᵀ`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(params: &InverseWishartParams, rng: &mut R) -> Result<DMatrix<f64>> {
    params.validate()?;
    let d = params.dim();
    let u = cholesky(&params.scale, "inverse-Wishart scale")?.l();
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let chi2 = 2.0 * log_gamma_variate(0.5 * (params.dof - i as f64), rng).exp();
        a[(i, i)] = chi2.sqrt();
        for k in 0..i {
            a[(i, k)] = StandardNormal.sample(rng);
        }
    }
    // M = U A^{-T}  <=>  A Mᵀ = Uᵀ
    let mt = a
        .solve_lower_triangular(&u.transpose())
        .ok_or_else(|| Error::Singular("Bartlett factor".into()))?;
    let m = mt.transpose();
    Ok(symmetrize(&(&m * m.transpose())))
}

/// Natural log of a Gamma(shape, 1) variate. Shapes below one use the
/// `G(shape + 1) · U^{1/shape}` boost so tiny shapes cannot underflow to zero.
pub fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if concentration.is_empty() {
        return Err(Error::Empty("Dirichlet concentration".into()));
    }
    if let Some(bad) = concentration.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(format!("Dirichlet concentration entries must be positive, got {bad}")));
    }
    let logs: Vec<f64> = concentration.iter().map(|&a| log_gamma_variate(a, rng)).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// Index drawn with probability proportional to `exp(log_weights)`.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Option<usize> {
    let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return None;
    }
    let total: f64 = log_weights.iter().map(|w| (w - m).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in log_weights.iter().enumerate() {
        let p = (w - m).exp();
        if p > 0.0 {
            last = i;
            if u < p {
                return Some(i);
            }
            u -= p;
        }
    }
    Some(last)
}

pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
            if u < p {
                return i;
            }
            u -= p;
        }
    }
    last
}
