//! Switching RBF-AR generator with a known state sequence.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::emission::{Emission, FeatureMap, RbfLayer};
use crate::error::{check_len, Error, Result};
use crate::linalg::cholesky;
use crate::math::{BasisFunction, DistanceMetric};
use crate::sampling::{sample_categorical, sample_inverse_wishart, sample_matrix_normal, InverseWishartParams, MatrixNormalParams};
use crate::series::TimeSeries;

const DIVERGENCE_BOUND: f64 = 1e8;

/// One ground-truth RBF-AR state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthState {
    pub centers: Vec<Vec<f64>>,
    pub basis: BasisFunction,
    pub metric: DistanceMetric,
    /// D×J.
    pub weights: DMatrix<f64>,
    /// D×D; all zeros means a noiseless state.
    pub noise_cov: DMatrix<f64>,
}

impl GroundTruthState {
    pub fn layer(&self) -> Result<RbfLayer> {
        RbfLayer::new(self.centers.clone(), self.basis, self.metric)
    }

    /// The state as a model emission (requires PD noise).
    pub fn emission(&self) -> Result<Emission> {
        Emission::new(FeatureMap::Rbf(self.layer()?), self.weights.clone(), self.noise_cov.clone())
    }

    fn noise_factor(&self) -> Result<DMatrix<f64>> {
        if self.noise_cov.iter().all(|v| *v == 0.0) {
            Ok(DMatrix::zeros(self.noise_cov.nrows(), self.noise_cov.ncols()))
        } else {
            Ok(cholesky(&self.noise_cov, "ground-truth noise covariance")?.l())
        }
    }
}

/// Noise covariance law for ground-truth states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseLaw {
    Fixed { cov: DMatrix<f64> },
    InverseWishart { params: InverseWishartParams },
}

impl NoiseLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DMatrix<f64>> {
        match self {
            NoiseLaw::Fixed { cov } => Ok(cov.clone()),
            NoiseLaw::InverseWishart { params } => sample_inverse_wishart(params, rng),
        }
    }
}

/// Laws for drawing ground-truth states. Centers are i.i.d.
/// `N(center_mean, center_var · I)`; with `eta = None` each state's basis
/// width is the median distance between its own centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLaws {
    pub weights: MatrixNormalParams,
    pub center_mean: Vec<f64>,
    pub center_var: f64,
    pub noise: NoiseLaw,
    pub eta: Option<f64>,
    pub metric: DistanceMetric,
    /// Warm-up steps used by the stability filter.
    pub warmup: usize,
    /// A warm-up path leaving `[-bound, bound]` is rejected.
    pub stability_bound: f64,
    pub max_rejections: usize,
}

fn median_pairwise_distance(centers: &[Vec<f64>], metric: DistanceMetric) -> Result<f64> {
    let mut d = Vec::new();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            d.push(metric.distance(&centers[i], &centers[j])?);
        }
    }
    if d.is_empty() {
        return Ok(1.0);
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let med = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    Ok(if med > 0.0 { med } else { 1.0 })
}

fn warmup_is_stable<R: Rng + ?Sized>(state: &GroundTruthState, lag: usize, laws: &GroundTruthLaws, rng: &mut R) -> Result<bool> {
    let spec = SynthSpec {
        transition: vec![vec![1.0]],
        states: vec![state.clone()],
        length: lag + laws.warmup,
        lag,
    };
    match simulate(&spec, rng) {
        Ok(out) => Ok(out.series.values().iter().all(|v| v.abs() <= laws.stability_bound)),
        Err(Error::Divergence { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Draws `k` independent states, each filtered by a warm-up stability run.
pub fn sample_ground_truth_states<R: Rng + ?Sized>(
    k: usize,
    lag: usize,
    laws: &GroundTruthLaws,
    rng: &mut R,
) -> Result<Vec<GroundTruthState>> {
    laws.weights.validate()?;
    let (dim, neurons) = laws.weights.mean.shape();
    let width = lag * dim;
    check_len(width, laws.center_mean.len())?;
    if !(laws.center_var >= 0.0) {
        return Err(Error::InvalidParameter("center variance must be non-negative".into()));
    }
    let sd = laws.center_var.sqrt();
    let mut out = Vec::with_capacity(k);
    for state in 0..k {
        let mut rejections = 0;
        loop {
            let weights = sample_matrix_normal(&laws.weights, rng)?;
            let centers: Vec<Vec<f64>> = (0..neurons)
                .map(|_| {
                    laws.center_mean
                        .iter()
                        .map(|m| {
                            let e: f64 = StandardNormal.sample(rng);
                            m + sd * e
                        })
                        .collect()
                })
                .collect();
            let eta = match laws.eta {
                Some(e) => e,
                None => median_pairwise_distance(&centers, laws.metric)?,
            };
            let noise_cov = laws.noise.sample(rng)?;
            check_len(dim, noise_cov.nrows())?;
            let candidate = GroundTruthState { centers, basis: BasisFunction::gaussian(eta), metric: laws.metric, weights, noise_cov };
            if warmup_is_stable(&candidate, lag, laws, rng)? {
                out.push(candidate);
                break;
            }
            rejections += 1;
            if rejections > laws.max_rejections {
                return Err(Error::Generation(format!(
                    "state {state}: more than {} consecutive unstable parameter draws",
                    laws.max_rejections
                )));
            }
        }
    }
    Ok(out)
}

/// `π_kk = stay`, off-diagonal mass spread uniformly.
pub fn sticky_transition_matrix(k: usize, stay: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&stay) || k == 0 {
        return Err(Error::InvalidParameter(format!("invalid sticky matrix: k={k}, stay={stay}")));
    }
    if k == 1 {
        return Ok(vec![vec![1.0]]);
    }
    let off = (1.0 - stay) / (k - 1) as f64;
    Ok((0..k).map(|i| (0..k).map(|j| if i == j { stay } else { off }).collect()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub transition: Vec<Vec<f64>>,
    pub states: Vec<GroundTruthState>,
    /// Total series length T, including the `lag` initial values.
    pub length: usize,
    pub lag: usize,
}

impl SynthSpec {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.weights.nrows())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.states.len();
        if k == 0 {
            return Err(Error::Empty("ground-truth states".into()));
        }
        check_len(k, self.transition.len())?;
        for (i, row) in self.transition.iter().enumerate() {
            check_len(k, row.len())?;
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidParameter(format!("transition row {i} is not stochastic (sum {s})")));
            }
        }
        if self.lag == 0 || self.length <= self.lag {
            return Err(Error::InsufficientData { needed: self.lag + 1, got: self.length });
        }
        let d = self.dim();
        for s in &self.states {
            check_len(d, s.weights.nrows())?;
            check_len(s.centers.len(), s.weights.ncols())?;
            for c in &s.centers {
                check_len(self.lag * d, c.len())?;
            }
            s.basis.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub series: TimeSeries,
    /// States at indices `lag..length`.
    pub z_true: Vec<usize>,
    pub spec: SynthSpec,
}

/// Initial `lag` values standard normal, `z` starts uniform, then
/// `y_t = W Φ(ȳ_t) + ε_t` under the active state.
pub fn simulate<R: Rng + ?Sized>(spec: &SynthSpec, rng: &mut R) -> Result<SynthOutput> {
    spec.validate()?;
    let d = spec.dim();
    let (r, t_total, k) = (spec.lag, spec.length, spec.states.len());
    let layers: Vec<RbfLayer> = spec.states.iter().map(|s| s.layer()).collect::<Result<_>>()?;
    let factors: Vec<DMatrix<f64>> = spec.states.iter().map(|s| s.noise_factor()).collect::<Result<_>>()?;
    let maps: Vec<FeatureMap> = layers.into_iter().map(FeatureMap::Rbf).collect();
    let mut y: Vec<f64> = (0..r * d).map(|_| StandardNormal.sample(rng)).collect();
    let mut z: Vec<usize> = Vec::with_capacity(t_total - r);
    let mut window = vec![0.0; r * d];
    let mut phi: Vec<Vec<f64>> = spec.states.iter().map(|s| vec![0.0; s.centers.len()]).collect();
    for t in r..t_total {
        let state = if t == r { rng.random_range(0..k) } else { sample_categorical(&spec.transition[z[z.len() - 1]], rng) };
        z.push(state);
        // most recent observation first
        for lag in 0..r {
            window[lag * d..(lag + 1) * d].copy_from_slice(&y[(t - 1 - lag) * d..(t - lag) * d]);
        }
        maps[state].features_into(&window, &mut phi[state])?;
        let w = &spec.states[state].weights;
        let eps: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for i in 0..d {
            let mean: f64 = (0..w.ncols()).map(|j| w[(i, j)] * phi[state][j]).sum();
            let noise: f64 = (0..=i).map(|j| factors[state][(i, j)] * eps[j]).sum();
            let v = mean + noise;
            if !v.is_finite() || v.abs() > DIVERGENCE_BOUND {
                return Err(Error::Divergence { state, t });
            }
            y.push(v);
        }
    }
    Ok(SynthOutput { series: TimeSeries::new(y, d)?, z_true: z, spec: spec.clone() })
}

/// Settings of the synthetic switching study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub states: usize,
    pub length: usize,
    pub lag: usize,
    pub neurons: usize,
    pub self_transition: f64,
    /// Weights are `MN(0, I, weight_var · I)`.
    pub weight_var: f64,
    pub center_var: f64,
    pub noise_var: f64,
    pub warmup: usize,
    pub stability_bound: f64,
    pub max_rejections: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            states: 6,
            length: 10_000,
            lag: 1,
            neurons: 5,
            self_transition: 0.95,
            weight_var: 4.0,
            center_var: 4.0,
            noise_var: 0.1,
            warmup: 200,
            stability_bound: 1e3,
            max_rejections: 100,
        }
    }
}

impl SynthConfig {
    /// Univariate laws implied by the settings.
    pub fn laws(&self) -> Result<GroundTruthLaws> {
        let j = self.neurons;
        Ok(GroundTruthLaws {
            weights: MatrixNormalParams::new(
                DMatrix::zeros(1, j),
                DMatrix::identity(1, 1),
                DMatrix::identity(j, j) * self.weight_var,
            )?,
            center_mean: vec![0.0; self.lag],
            center_var: self.center_var,
            noise: NoiseLaw::Fixed { cov: DMatrix::from_element(1, 1, self.noise_var) },
            eta: None,
            metric: DistanceMetric::Euclidean,
            warmup: self.warmup,
            stability_bound: self.stability_bound,
            max_rejections: self.max_rejections,
        })
    }

    pub fn spec<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SynthSpec> {
        let states = sample_ground_truth_states(self.states, self.lag, &self.laws()?, rng)?;
        Ok(SynthSpec {
            transition: sticky_transition_matrix(self.states, self.self_transition)?,
            states,
            length: self.length,
            lag: self.lag,
        })
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SynthOutput> {
        let spec = self.spec(rng)?;
        simulate(&spec, rng)
    }
}
