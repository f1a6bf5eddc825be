//! State-specific autoregressive emissions.
//!
//! An emission predicts `y_t` from its lagged window through a feature map
//! `Φ(ȳ_t)` and a D×J weight matrix, `y_t ~ N(W Φ(ȳ_t), Σ)`. The RBF map uses
//! `Φ_j = φ(d(ȳ_t, c_j))`; the linear map is the identity on the flattened
//! window, which turns the same conjugate machinery into a plain VAR.
//!
//! Weights and noise carry a matrix-normal / inverse-Wishart prior,
//! `Σ ~ IW(n₀, S₀)`, `W | Σ ~ MN(M₀, Σ, (κ₀ I)⁻¹)`, so the posterior given
//! assigned observations is available in closed form from [`SufficientStats`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{cholesky, cholesky_repaired, GaussianNoise};
use crate::math::{BasisFunction, DistanceMetric};
use crate::sampling::{sample_inverse_wishart, standard_normal_matrix, InverseWishartParams};
use crate::series::{LaggedData, LaggedWindow};

/// Hidden layer of an RBF network: J centers in window space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfLayer {
    centers: Vec<Vec<f64>>,
    pub basis: BasisFunction,
    pub metric: DistanceMetric,
}

impl RbfLayer {
    pub fn new(centers: Vec<Vec<f64>>, basis: BasisFunction, metric: DistanceMetric) -> Result<Self> {
        basis.validate()?;
        let width = centers.first().map(Vec::len).ok_or_else(|| Error::Empty("RBF layer needs at least one center".into()))?;
        for c in &centers {
            check_len(width, c.len())?;
        }
        Ok(Self { centers, basis, metric })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn width(&self) -> usize {
        self.centers[0].len()
    }

    pub fn neurons(&self) -> usize {
        self.centers.len()
    }

    pub fn with_centers(&self, centers: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(centers, self.basis, self.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    Rbf(RbfLayer),
    /// Identity on the flattened window (linear AR emission).
    Linear { width: usize },
}

impl FeatureMap {
    pub fn input_width(&self) -> usize {
        match self {
            FeatureMap::Rbf(l) => l.width(),
            FeatureMap::Linear { width } => *width,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Rbf(l) => l.neurons(),
            FeatureMap::Linear { width } => *width,
        }
    }

    pub fn features_into(&self, window: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.input_width(), window.len())?;
        check_len(self.output_dim(), out.len())?;
        match self {
            FeatureMap::Rbf(layer) => {
                for (o, c) in out.iter_mut().zip(&layer.centers) {
                    *o = layer.basis.apply(layer.metric.distance(window, c)?);
                }
            }
            FeatureMap::Linear { .. } => out.copy_from_slice(window),
        }
        Ok(())
    }

    pub fn features(&self, window: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.features_into(window, &mut out)?;
        Ok(out)
    }

    /// N×J design matrix for the given rows of `data` (all rows when `None`).
    pub fn design(&self, data: &LaggedData, idx: Option<&[usize]>) -> Result<DMatrix<f64>> {
        let rows: Vec<usize> = match idx {
            Some(ix) => ix.to_vec(),
            None => (0..data.len()).collect(),
        };
        let j = self.output_dim();
        let mut m = DMatrix::zeros(rows.len(), j);
        let mut buf = vec![0.0; j];
        for (r, &i) in rows.iter().enumerate() {
            self.features_into(data.window(i), &mut buf)?;
            for (c, v) in buf.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        Ok(m)
    }
}

/// Identity feature map of a window, for the linear AR emission.
pub fn linear_feature_map(window: &LaggedWindow) -> Vec<f64> {
    window.as_slice().to_vec()
}

/// One state's emission: feature map, D×J weights and Gaussian noise.
#[derive(Debug, Clone)]
pub struct Emission {
    map: FeatureMap,
    weights: DMatrix<f64>,
    noise: GaussianNoise,
}

impl Emission {
    pub fn new(map: FeatureMap, weights: DMatrix<f64>, noise_cov: DMatrix<f64>) -> Result<Self> {
        check_len(map.output_dim(), weights.ncols())?;
        check_len(weights.nrows(), noise_cov.nrows())?;
        let noise = GaussianNoise::new(noise_cov)?;
        Ok(Self { map, weights, noise })
    }

    pub fn rbf(layer: RbfLayer, weights: DMatrix<f64>, noise_cov: DMatrix<f64>) -> Result<Self> {
        Self::new(FeatureMap::Rbf(layer), weights, noise_cov)
    }

    pub fn linear(coeffs: DMatrix<f64>, noise_cov: DMatrix<f64>) -> Result<Self> {
        let width = coeffs.ncols();
        Self::new(FeatureMap::Linear { width }, coeffs, noise_cov)
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        self.noise.cov()
    }

    pub fn noise(&self) -> &GaussianNoise {
        &self.noise
    }

    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn neurons(&self) -> usize {
        self.weights.ncols()
    }

    pub fn rbf_layer(&self) -> Option<&RbfLayer> {
        match &self.map {
            FeatureMap::Rbf(l) => Some(l),
            FeatureMap::Linear { .. } => None,
        }
    }

    pub fn feature_vector(&self, window: &LaggedWindow) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.map.features(window.as_slice())?))
    }

    pub fn predict_mean(&self, window: &LaggedWindow) -> Result<DVector<f64>> {
        Ok(&self.weights * self.feature_vector(window)?)
    }

    /// Mean prediction into `out` using `phi` as scratch space.
    pub fn predict_into(&self, window: &[f64], phi: &mut [f64], out: &mut [f64]) -> Result<()> {
        self.map.features_into(window, phi)?;
        for (d, o) in out.iter_mut().enumerate() {
            *o = phi.iter().enumerate().map(|(j, p)| self.weights[(d, j)] * p).sum();
        }
        Ok(())
    }

    pub fn log_likelihood(&self, y: &[f64], window: &LaggedWindow) -> Result<f64> {
        let mut phi = vec![0.0; self.neurons()];
        self.log_likelihood_slice(y, window.as_slice(), &mut phi)
    }

    /// Allocation-free log N(y | W Φ(window), Σ) with caller-provided scratch.
    pub fn log_likelihood_slice(&self, y: &[f64], window: &[f64], phi: &mut [f64]) -> Result<f64> {
        check_len(self.dim(), y.len())?;
        self.map.features_into(window, phi)?;
        let d = self.dim();
        if d == 1 {
            let pred: f64 = phi.iter().enumerate().map(|(j, p)| self.weights[(0, j)] * p).sum();
            return Ok(self.noise.log_density(&[y[0] - pred]));
        }
        let mut resid = vec![0.0; d];
        for (k, r) in resid.iter_mut().enumerate() {
            let pred: f64 = phi.iter().enumerate().map(|(j, p)| self.weights[(k, j)] * p).sum();
            *r = y[k] - pred;
        }
        Ok(self.noise.log_density(&resid))
    }

    /// ∂/∂W log N(y | WΦ, Σ) = Σ⁻¹ (y − WΦ) Φᵀ.
    pub fn weight_score(&self, y: &[f64], window: &LaggedWindow) -> Result<DMatrix<f64>> {
        let phi = self.feature_vector(window)?;
        let resid = DVector::from_row_slice(y) - &self.weights * &phi;
        Ok(self.noise.precision_times(&resid) * phi.transpose())
    }

    pub fn with_weights(&self, weights: DMatrix<f64>) -> Result<Self> {
        Self::new(self.map.clone(), weights, self.noise_cov().clone())
    }

    pub fn with_map(&self, map: FeatureMap) -> Result<Self> {
        Self::new(map, self.weights.clone(), self.noise_cov().clone())
    }
}

/// Conjugate prior on one state's emission plus the center perturbation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionHyperprior {
    /// Inverse-Wishart degrees of freedom n₀.
    pub noise_dof: f64,
    /// Inverse-Wishart scale S₀ (D×D).
    pub noise_scale: DMatrix<f64>,
    /// Ridge κ₀: prior column precision of the weights.
    pub ridge: f64,
    /// Prior weight mean M₀ (D×J); zero when absent.
    pub prior_mean: Option<DMatrix<f64>>,
}

impl EmissionHyperprior {
    pub fn new(noise_dof: f64, noise_scale: DMatrix<f64>, ridge: f64) -> Result<Self> {
        let p = Self { noise_dof, noise_scale, ridge, prior_mean: None };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.noise_scale.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        InverseWishartParams::new(self.noise_dof, self.noise_scale.clone())?;
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        Ok(())
    }

    fn prior_mean_for(&self, j: usize) -> Result<DMatrix<f64>> {
        match &self.prior_mean {
            Some(m) => {
                check_len(j, m.ncols())?;
                Ok(m.clone())
            }
            None => Ok(DMatrix::zeros(self.dim(), j)),
        }
    }
}

/// Regression sufficient statistics of one state, prior terms included.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub phi_phi: DMatrix<f64>,
    pub y_phi: DMatrix<f64>,
    pub y_y: DMatrix<f64>,
    pub count: usize,
}

impl SufficientStats {
    /// Prior-only statistics: `S_ΦΦ = κ₀I`, `S_YΦ = M₀κ₀`, `S_YY = M₀κ₀M₀ᵀ`.
    pub fn prior(prior: &EmissionHyperprior, j: usize) -> Result<Self> {
        let m0 = prior.prior_mean_for(j)?;
        Ok(Self {
            phi_phi: DMatrix::identity(j, j) * prior.ridge,
            y_phi: &m0 * prior.ridge,
            y_y: &m0 * m0.transpose() * prior.ridge,
            count: 0,
        })
    }

    /// Adds the data terms of the given rows.
    pub fn add_rows(&mut self, data: &LaggedData, map: &FeatureMap, idx: &[usize]) -> Result<()> {
        const CHUNK: usize = 4096;
        let d = data.dim();
        for chunk in idx.chunks(CHUNK) {
            let phi = map.design(data, Some(chunk))?;
            let mut y = DMatrix::zeros(chunk.len(), d);
            for (r, &i) in chunk.iter().enumerate() {
                for (c, v) in data.target(i).iter().enumerate() {
                    y[(r, c)] = *v;
                }
            }
            self.phi_phi += phi.tr_mul(&phi);
            self.y_phi += y.tr_mul(&phi);
            self.y_y += y.tr_mul(&y);
        }
        self.count += idx.len();
        Ok(())
    }
}

/// Statistics over the rows of `data` assigned to `state`.
pub fn accumulate_stats(
    data: &LaggedData,
    assignments: &[usize],
    state: usize,
    map: &FeatureMap,
    prior: &EmissionHyperprior,
) -> Result<SufficientStats> {
    check_len(data.len(), assignments.len())?;
    let idx: Vec<usize> = assignments.iter().enumerate().filter(|(_, z)| **z == state).map(|(i, _)| i).collect();
    accumulate_stats_for(data, &idx, map, prior)
}

pub fn accumulate_stats_for(
    data: &LaggedData,
    idx: &[usize],
    map: &FeatureMap,
    prior: &EmissionHyperprior,
) -> Result<SufficientStats> {
    check_len(map.input_width(), data.width())?;
    let mut stats = SufficientStats::prior(prior, map.output_dim())?;
    stats.add_rows(data, map, idx)?;
    Ok(stats)
}

/// Posterior mean of the weights, `S_YΦ S_ΦΦ⁻¹`.
pub fn solve_weights_map(stats: &SufficientStats) -> Result<DMatrix<f64>> {
    let c = cholesky(&stats.phi_phi, "S_ΦΦ").map_err(|_| Error::Singular("S_ΦΦ is singular; use a positive ridge".into()))?;
    Ok(c.solve(&stats.y_phi.transpose()).transpose())
}

/// Closed-form posterior parameters: weight mean, `S_Y|Φ + S₀` and the
/// posterior inverse-Wishart degrees of freedom.
pub struct EmissionPosterior {
    pub weight_mean: DMatrix<f64>,
    pub noise: InverseWishartParams,
    phi_chol_l: DMatrix<f64>,
}

impl EmissionPosterior {
    pub fn new(stats: &SufficientStats, prior: &EmissionHyperprior) -> Result<Self> {
        let (_, c) = cholesky_repaired(&stats.phi_phi, "S_ΦΦ")?;
        let weight_mean = c.solve(&stats.y_phi.transpose()).transpose();
        let s_y_given_phi = &stats.y_y - &weight_mean * stats.y_phi.transpose();
        let scale = s_y_given_phi + &prior.noise_scale;
        let (scale, _) = cholesky_repaired(&scale, "S_Y|Φ + S₀")?;
        let noise = InverseWishartParams::new(prior.noise_dof + stats.count as f64, scale)?;
        Ok(Self { weight_mean, noise, phi_chol_l: c.l() })
    }

    /// Draws `Σ ~ IW(n₀ + N, S_Y|Φ + S₀)` then `W | Σ ~ MN(S_YΦ S_ΦΦ⁻¹, Σ, S_ΦΦ⁻¹)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let sigma = sample_inverse_wishart(&self.noise, rng)?;
        let w = self.sample_weights_given(&sigma, rng)?;
        Ok((w, sigma))
    }

    pub fn sample_weights_given<R: Rng + ?Sized>(&self, sigma: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
        let (d, j) = self.weight_mean.shape();
        let a = cholesky(sigma, "noise covariance")?.l();
        let z = standard_normal_matrix(d, j, rng);
        // Z L⁻¹ has column covariance (L Lᵀ)⁻¹ = S_ΦΦ⁻¹.
        let zt = self
            .phi_chol_l
            .transpose()
            .solve_upper_triangular(&z.transpose())
            .ok_or_else(|| Error::Singular("S_ΦΦ factor".into()))?;
        Ok(&self.weight_mean + a * zt.transpose())
    }
}

pub fn sample_posterior_emission<R: Rng + ?Sized>(
    stats: &SufficientStats,
    prior: &EmissionHyperprior,
    rng: &mut R,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    EmissionPosterior::new(stats, prior)?.sample(rng)
}

/// Labeled exemplar windows whose mean seeds the basis centers.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    pub label: String,
    pub windows: Vec<LaggedWindow>,
    mean: Vec<f64>,
}

impl PrototypeSet {
    pub fn new(label: impl Into<String>, windows: Vec<LaggedWindow>) -> Result<Self> {
        let first = windows.first().ok_or_else(|| Error::Empty("prototype set has no windows".into()))?;
        let (lag, dim) = (first.lag(), first.dim());
        let mut mean = vec![0.0; lag * dim];
        for w in &windows {
            if w.lag() != lag || w.dim() != dim {
                return Err(Error::Dimension { expected: lag * dim, got: w.lag() * w.dim() });
            }
            for (m, v) in mean.iter_mut().zip(w.as_slice()) {
                *m += v;
            }
        }
        let n = windows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(Self { label: label.into(), windows, mean })
    }

    pub fn from_lagged(label: impl Into<String>, data: &LaggedData) -> Result<Self> {
        Self::new(label, data.windows())
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Per-coordinate variance pooled into one scalar.
    pub fn pooled_variance(&self) -> f64 {
        let n = self.windows.len() as f64;
        let mut acc = 0.0;
        for w in &self.windows {
            acc += w.as_slice().iter().zip(&self.mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>();
        }
        acc / (n * self.mean.len() as f64)
    }
}

/// J draws from `N(mean, B)`.
pub fn resample_centers<R: Rng + ?Sized>(
    mean: &[f64],
    center_cov: &DMatrix<f64>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_len(mean.len(), center_cov.nrows())?;
    if count == 0 {
        return Err(Error::InvalidParameter("number of centers must be at least 1".into()));
    }
    let l = cholesky(center_cov, "center covariance B")?.l();
    let w = mean.len();
    Ok((0..count)
        .map(|_| {
            let z: DVector<f64> = DVector::from_fn(w, |_, _| StandardNormal.sample(rng));
            let c = &l * z;
            mean.iter().zip(c.iter()).map(|(m, e)| m + e).collect()
        })
        .collect())
}

/// J perturbed copies of the prototype mean, `c_j ~ N(ȳ, B)`.
pub fn init_centers_from_prototypes<R: Rng + ?Sized>(
    protos: &PrototypeSet,
    count: usize,
    center_cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    resample_centers(protos.mean(), center_cov, count, rng)
}

/// Isotropic center covariance `σ_B² I`.
pub fn isotropic(width: usize, variance: f64) -> DMatrix<f64> {
    DMatrix::identity(width, width) * variance
}
