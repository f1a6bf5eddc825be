//! Sticky HDP-HMM backbone and the blocked Gibbs sweep.
//!
//! The HDP prior is handled with the weak-limit truncation to `L` states:
//! `β ~ Dir(γ/L, …, γ/L)`, `π_k | β ~ Dir(αβ + λ e_k)`, `z_1 ~ β`,
//! `z_t | z_{t-1} ~ π_{z_{t-1}}`. A sweep resamples, in order:
//!
//! 1. backward messages `m_{t+1,t}(k) = p(y_{t+1:N} | z_t = k)` in log space,
//! 2. the state sequence forward from the messages,
//! 3. transition counts,
//! 4. `β` through auxiliary table counts with the sticky override
//!    correction, integrating `Π` out,
//! 5. each row `π_k | β, n`,
//! 6. basis centers `c^(k) ~ N(ȳ^(k), B^(k))` (optional),
//! 7. `Σ^(k), W^(k)` from their conjugate posterior.
//!
//! `β` is drawn before `Π` so that the pair is a draw from `p(β, Π | z)`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{
    isotropic, resample_centers, solve_weights_map, Emission, EmissionHyperprior, EmissionPosterior, FeatureMap,
    RbfLayer, SufficientStats,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::logsumexp;
use crate::math::{BasisFunction, DistanceMetric};
use crate::rng::seeded;
use crate::sampling::{sample_categorical, sample_dirichlet, sample_log_categorical};
use crate::series::LaggedData;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickyHdpPrior {
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub truncation: usize,
    pub emission: EmissionHyperprior,
}

impl StickyHdpPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.alpha > 0.0) {
            return Err(Error::InvalidParameter("gamma and alpha must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter("sticky mass lambda must be non-negative".into()));
        }
        if self.truncation < 1 {
            return Err(Error::InvalidParameter("truncation level must be at least 1".into()));
        }
        self.emission.validate()
    }
}

/// How state emissions are parameterized.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionFamily {
    Rbf(RbfFamily),
    Linear,
}

/// RBF emissions whose centers are drawn around state window means.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfFamily {
    pub neurons: usize,
    pub basis: BasisFunction,
    pub metric: DistanceMetric,
    /// `B^(k) = spread · var(windows of k) · I`.
    pub center_spread: f64,
    /// Prototype mean used for unoccupied states.
    pub prototype_mean: Vec<f64>,
    /// Prototype center covariance used for unoccupied states.
    pub prototype_cov: DMatrix<f64>,
}

impl RbfFamily {
    /// Uses every window of `data` as the prototype pool.
    pub fn from_data(
        data: &LaggedData,
        neurons: usize,
        basis: BasisFunction,
        metric: DistanceMetric,
        center_spread: f64,
    ) -> Self {
        let var = data.pooled_window_variance(None).max(1e-12);
        Self {
            neurons,
            basis,
            metric,
            center_spread,
            prototype_mean: data.mean_window(None),
            prototype_cov: isotropic(data.width(), center_spread * var),
        }
    }

    fn center_law(&self, data: &LaggedData, idx: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
        if idx.is_empty() {
            return (self.prototype_mean.clone(), self.prototype_cov.clone());
        }
        let floor = 1e-6 * self.prototype_cov[(0, 0)];
        let var = (self.center_spread * data.pooled_window_variance(Some(idx))).max(floor);
        (data.mean_window(Some(idx)), isotropic(data.width(), var))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub center_resampling: bool,
    pub fixed_weights: bool,
    pub thinning: usize,
    /// Number of k-means clusters used to seed the state sequence.
    pub init_states: usize,
    /// Half-width of the time neighborhood summarized for seeding; 0 seeds
    /// on the (window, target) pairs themselves.
    pub init_context: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            burn_in: 500,
            center_resampling: true,
            fixed_weights: false,
            thinning: 1,
            init_states: 10,
            init_context: 5,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidParameter(format!(
                "burn-in ({}) must be smaller than sweeps ({})",
                self.burn_in, self.sweeps
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be at least 1".into()));
        }
        if self.init_states == 0 {
            return Err(Error::InvalidParameter("init_states must be at least 1".into()));
        }
        Ok(())
    }
}

/// N×L table of emission log-likelihoods, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikTable {
    values: Vec<f64>,
    states: usize,
}

impl LogLikTable {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let states = rows.first().map(Vec::len).ok_or_else(|| Error::Empty("log-likelihood table".into()))?;
        for r in rows {
            check_len(states, r.len())?;
        }
        Ok(Self { values: rows.concat(), states })
    }

    /// Evaluates every emission at every time index, states in parallel.
    pub fn compute(data: &LaggedData, emissions: &[Emission]) -> Result<Self> {
        let n = data.len();
        let states = emissions.len();
        let columns: Vec<Vec<f64>> = emissions
            .par_iter()
            .map(|e| {
                let mut phi = vec![0.0; e.neurons()];
                (0..n).map(|t| e.log_likelihood_slice(data.target(t), data.window(t), &mut phi)).collect()
            })
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * states];
        for (k, col) in columns.iter().enumerate() {
            for (t, v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { t, what: format!("emission log-likelihood of state {k}") });
                }
                values[t * states + k] = *v;
            }
        }
        Ok(Self { values, states })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.states
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.states..(t + 1) * self.states]
    }
}

/// Backward messages in log space. Row `t` holds `log m_{t+1,t}(k)` up to
/// the per-row normalizer; the final row is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageTable {
    log_m: Vec<f64>,
    log_norm: Vec<f64>,
    states: usize,
}

impl MessageTable {
    pub fn len(&self) -> usize {
        self.log_norm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_norm.is_empty()
    }

    /// Normalized row (max-free, log-sum-exp zero except the final row).
    pub fn row(&self, t: usize) -> &[f64] {
        &self.log_m[t * self.states..(t + 1) * self.states]
    }

    /// Sum of normalizers removed from rows `t..`.
    pub fn tail_norm(&self, t: usize) -> f64 {
        self.log_norm[t..].iter().sum()
    }

    /// Unnormalized `log m_{t+1,t}(k)`.
    pub fn log_message(&self, t: usize, k: usize) -> f64 {
        self.row(t)[k] + self.tail_norm(t)
    }
}

fn log_matrix(pi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    pi.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect()
}

/// `log m_{t+1,t}(k) = log Σ_q π_kq ℓ_q(y_{t+1}) m_{t+2,t+1}(q)`, the
/// emission indexed by the successor state q. The recursion runs in scaled
/// linear space; each row is rescaled to sum to one.
pub fn backward_messages(table: &LogLikTable, pi: &[Vec<f64>]) -> Result<MessageTable> {
    let l = table.states();
    check_len(l, pi.len())?;
    for row in pi {
        check_len(l, row.len())?;
    }
    let n = table.len();
    let mut log_m = vec![0.0; n * l];
    let mut log_norm = vec![0.0; n];
    // linear-space message of the successor row, scaled to sum to one
    let mut next = vec![1.0 / l as f64; l];
    let mut next_log = vec![-(l as f64).ln(); l];
    let mut next_log_scale = (l as f64).ln();
    let mut weighted = vec![0.0; l];
    let mut lin = vec![0.0; l];
    let mut terms = vec![0.0; l];
    for t in (0..n.saturating_sub(1)).rev() {
        let ll = table.row(t + 1);
        let peak = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for q in 0..l {
            weighted[q] = (ll[q] - peak).exp() * next[q];
        }
        let mut total = 0.0;
        for k in 0..l {
            let row = &pi[k];
            let mut acc = 0.0;
            for q in 0..l {
                acc += row[q] * weighted[q];
            }
            lin[k] = acc;
            total += acc;
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NonFinite { t, what: "backward message underflow".into() });
        }
        let log_total = total.ln();
        let cur = &mut log_m[t * l..(t + 1) * l];
        for k in 0..l {
            if lin[k] > 0.0 {
                lin[k] /= total;
                cur[k] = lin[k].ln();
            } else {
                // underflowed in linear space; redo this entry in log space
                for q in 0..l {
                    terms[q] = pi[k][q].ln() + ll[q] - peak + next_log[q];
                }
                cur[k] = logsumexp(&terms) - log_total;
            }
        }
        // unnormalized log m = log lin + log total + peak + successor scale
        log_norm[t] = log_total + peak + next_log_scale;
        std::mem::swap(&mut next, &mut lin);
        next_log.copy_from_slice(cur);
        next_log_scale = 0.0;
    }
    Ok(MessageTable { log_m, log_norm, states: l })
}

/// `log p(y_{1:N} | Π, β, θ)` from the messages.
pub fn marginal_log_likelihood(table: &LogLikTable, messages: &MessageTable, beta: &[f64]) -> f64 {
    let first: Vec<f64> = (0..table.states())
        .map(|k| beta[k].ln() + table.row(0)[k] + messages.row(0)[k])
        .collect();
    logsumexp(&first) + messages.tail_norm(0)
}

/// Forward pass: `z_1 ∝ β_k ℓ_k(y_1) m(k)`, `z_t ∝ π_{z_{t-1},k} ℓ_k(y_t) m(k)`.
pub fn forward_sample_states<R: Rng + ?Sized>(
    messages: &MessageTable,
    pi: &[Vec<f64>],
    beta: &[f64],
    table: &LogLikTable,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let l = table.states();
    check_len(l, beta.len())?;
    let log_pi = log_matrix(pi);
    let n = table.len();
    let mut z: Vec<usize> = Vec::with_capacity(n);
    let mut w = vec![0.0; l];
    for t in 0..n {
        let ll = table.row(t);
        let m = messages.row(t);
        for k in 0..l {
            let prior = if t == 0 { beta[k].ln() } else { log_pi[z[t - 1]][k] };
            w[k] = prior + ll[k] + m[k];
        }
        let k = sample_log_categorical(&w, rng).ok_or_else(|| Error::NonFinite { t, what: "all-zero state posterior".into() })?;
        z.push(k);
    }
    Ok(z)
}

/// Most probable state path for fixed parameters.
pub fn viterbi(table: &LogLikTable, pi: &[Vec<f64>], beta: &[f64]) -> Vec<usize> {
    let l = table.states();
    let n = table.len();
    let log_pi = log_matrix(pi);
    let mut delta: Vec<f64> = (0..l).map(|k| beta[k].ln() + table.row(0)[k]).collect();
    let mut back = vec![0usize; n * l];
    for t in 1..n {
        let mut next = vec![f64::NEG_INFINITY; l];
        for k in 0..l {
            for j in 0..l {
                let v = delta[j] + log_pi[j][k];
                if v > next[k] {
                    next[k] = v;
                    back[t * l + k] = j;
                }
            }
            next[k] += table.row(t)[k];
        }
        delta = next;
    }
    let mut best = 0;
    for k in 1..l {
        if delta[k] > delta[best] {
            best = k;
        }
    }
    let mut z = vec![best; n];
    for t in (1..n).rev() {
        z[t - 1] = back[t * l + z[t]];
    }
    z
}

/// `n[k][q] = #{t ≥ 2 : z_{t-1} = k, z_t = q}`.
pub fn count_transitions(z: &[usize], states: usize) -> Result<Vec<Vec<usize>>> {
    if let Some(&bad) = z.iter().find(|&&s| s >= states) {
        return Err(Error::StateOutOfRange { state: bad, states });
    }
    let mut n = vec![vec![0usize; states]; states];
    for w in z.windows(2) {
        n[w[0]][w[1]] += 1;
    }
    Ok(n)
}

/// `π_k ~ Dir(αβ_1 + n_k1, …, αβ_k + λ + n_kk, …)`.
pub fn sample_transition_rows<R: Rng + ?Sized>(
    beta: &[f64],
    counts: &[Vec<usize>],
    alpha: f64,
    lambda: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let l = beta.len();
    check_len(l, counts.len())?;
    (0..l)
        .map(|k| {
            let conc: Vec<f64> = (0..l)
                .map(|q| alpha * beta[q] + counts[k][q] as f64 + if q == k { lambda } else { 0.0 })
                .collect();
            sample_dirichlet(&conc, rng)
        })
        .collect()
}

/// Auxiliary table counts `m̄` for the top-level weights: Chinese-restaurant
/// table counts per (row, column), then the sticky override correction
/// removes `w_kk ~ Bin(m_kk, λ / (λ + αβ_k))` self-transition tables.
pub fn sample_table_counts<R: Rng + ?Sized>(
    counts: &[Vec<usize>],
    beta: &[f64],
    alpha: f64,
    lambda: f64,
    rng: &mut R,
) -> Vec<usize> {
    let l = beta.len();
    let mut m_bar = vec![0usize; l];
    for (k, row) in counts.iter().enumerate() {
        for (q, &n) in row.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let a = alpha * beta[q] + if q == k { lambda } else { 0.0 };
            let mut m = 0usize;
            for i in 0..n {
                if rng.random::<f64>() < a / (a + i as f64) {
                    m += 1;
                }
            }
            if q == k && lambda > 0.0 {
                let rho = lambda / (lambda + alpha * beta[k]);
                let mut w = 0usize;
                for _ in 0..m {
                    if rng.random::<f64>() < rho {
                        w += 1;
                    }
                }
                m -= w;
            }
            m_bar[q] += m;
        }
    }
    m_bar
}

/// `β ~ Dir(γ/L + m̄_1 + [z_1 = 1], …)`.
pub fn sample_beta<R: Rng + ?Sized>(
    counts: &[Vec<usize>],
    beta: &[f64],
    alpha: f64,
    gamma: f64,
    lambda: f64,
    first_state: Option<usize>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let l = beta.len();
    check_len(l, counts.len())?;
    let m_bar = sample_table_counts(counts, beta, alpha, lambda, rng);
    let conc: Vec<f64> = (0..l)
        .map(|k| gamma / l as f64 + m_bar[k] as f64 + if first_state == Some(k) { 1.0 } else { 0.0 })
        .collect();
    sample_dirichlet(&conc, rng)
}

/// Full sampler state.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub z: Vec<usize>,
    pub pi: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub emissions: Vec<Emission>,
    pub counts: Vec<Vec<usize>>,
}

impl ChainState {
    pub fn states(&self) -> usize {
        self.beta.len()
    }

    pub fn occupancy(&self) -> Vec<usize> {
        let mut occ = vec![0usize; self.states()];
        for &k in &self.z {
            occ[k] += 1;
        }
        occ
    }

    /// Number of states holding at least one observation.
    pub fn occupied_states(&self) -> usize {
        self.occupancy().iter().filter(|&&c| c > 0).count()
    }

    /// `log β_{z_1} + Σ log π_{z_{t-1} z_t} + Σ log ℓ_{z_t}(y_t)`.
    pub fn joint_log_likelihood(&self, data: &LaggedData) -> Result<f64> {
        check_len(data.len(), self.z.len())?;
        let mut total = self.beta[self.z[0]].ln();
        for w in self.z.windows(2) {
            total += self.pi[w[0]][w[1]].ln();
        }
        let mut bufs: Vec<Vec<f64>> = self.emissions.iter().map(|e| vec![0.0; e.neurons()]).collect();
        for (t, &k) in self.z.iter().enumerate() {
            total += self.emissions[k].log_likelihood_slice(data.target(t), data.window(t), &mut bufs[k])?;
        }
        Ok(total)
    }

    /// Checks row-stochasticity, the simplex constraint and count consistency.
    pub fn check_invariants(&self) -> Result<()> {
        let l = self.states();
        for (k, row) in self.pi.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-10 || row.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidParameter(format!("transition row {k} sums to {s}")));
            }
        }
        let s: f64 = self.beta.iter().sum();
        if (s - 1.0).abs() > 1e-10 || self.beta.iter().any(|b| *b < 0.0) {
            return Err(Error::InvalidParameter(format!("beta sums to {s}")));
        }
        if count_transitions(&self.z, l)? != self.counts {
            return Err(Error::InvalidParameter("transition counts inconsistent with z".into()));
        }
        Ok(())
    }

    /// Relabels states so that new label `i` is old label `order[i]`.
    pub fn relabeled(&self, order: &[usize]) -> Result<ChainState> {
        let l = self.states();
        check_len(l, order.len())?;
        let mut inverse = vec![usize::MAX; l];
        for (new, &old) in order.iter().enumerate() {
            if old >= l || inverse[old] != usize::MAX {
                return Err(Error::InvalidParameter("relabeling is not a permutation".into()));
            }
            inverse[old] = new;
        }
        let z: Vec<usize> = self.z.iter().map(|&k| inverse[k]).collect();
        let pi = order.iter().map(|&a| order.iter().map(|&b| self.pi[a][b]).collect()).collect();
        let beta = order.iter().map(|&a| self.beta[a]).collect();
        let emissions = order.iter().map(|&a| self.emissions[a].clone()).collect();
        let counts = count_transitions(&z, l)?;
        Ok(ChainState { z, pi, beta, emissions, counts })
    }

    /// Occupancy-sorted label order (most occupied first, ties by label).
    pub fn canonical_order(&self) -> Vec<usize> {
        let occ = self.occupancy();
        let mut order: Vec<usize> = (0..self.states()).collect();
        order.sort_by(|a, b| occ[*b].cmp(&occ[*a]).then(a.cmp(b)));
        order
    }
}

fn state_indices(z: &[usize], states: usize) -> Vec<Vec<usize>> {
    let mut idx = vec![Vec::new(); states];
    for (t, &k) in z.iter().enumerate() {
        idx[k].push(t);
    }
    idx
}

/// Draws fresh centers (when enabled) and conjugate emission parameters for
/// every state given the current assignments. States use independent
/// sub-streams seeded sequentially from `rng`.
fn update_emissions<R: Rng + ?Sized>(
    data: &LaggedData,
    z: &[usize],
    current: Option<&[Emission]>,
    prior: &StickyHdpPrior,
    family: &EmissionFamily,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<Vec<Emission>> {
    let l = prior.truncation;
    let idx = state_indices(z, l);
    let seeds: Vec<u64> = (0..l).map(|_| rng.next_u64()).collect();
    (0..l)
        .into_par_iter()
        .map(|k| {
            let mut srng = seeded(seeds[k]);
            let map = match family {
                EmissionFamily::Linear => FeatureMap::Linear { width: data.width() },
                EmissionFamily::Rbf(f) => {
                    let keep = current.filter(|_| !config.center_resampling).and_then(|c| c[k].rbf_layer().cloned());
                    match keep {
                        Some(layer) => FeatureMap::Rbf(layer),
                        None => {
                            let (mean, cov) = f.center_law(data, &idx[k]);
                            let centers = resample_centers(&mean, &cov, f.neurons, &mut srng)?;
                            FeatureMap::Rbf(RbfLayer::new(centers, f.basis, f.metric)?)
                        }
                    }
                }
            };
            let mut stats = SufficientStats::prior(&prior.emission, map.output_dim())?;
            stats.add_rows(data, &map, &idx[k])?;
            let post = EmissionPosterior::new(&stats, &prior.emission)?;
            let (w, sigma) = if config.fixed_weights {
                let (_, sigma) = post.sample(&mut srng)?;
                (solve_weights_map(&stats)?, sigma)
            } else {
                post.sample(&mut srng)?
            };
            Emission::new(map, w, sigma)
        })
        .collect()
}

/// One blocked Gibbs sweep. The input state is never modified.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &ChainState,
    data: &LaggedData,
    prior: &StickyHdpPrior,
    family: &EmissionFamily,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<ChainState> {
    let l = prior.truncation;
    check_len(l, state.states())?;
    let table = LogLikTable::compute(data, &state.emissions)?;
    let messages = backward_messages(&table, &state.pi)?;
    let z = forward_sample_states(&messages, &state.pi, &state.beta, &table, rng)?;
    let counts = count_transitions(&z, l)?;
    let beta = sample_beta(&counts, &state.beta, prior.alpha, prior.gamma, prior.lambda, Some(z[0]), rng)?;
    let pi = sample_transition_rows(&beta, &counts, prior.alpha, prior.lambda, rng)?;
    let emissions = update_emissions(data, &z, Some(&state.emissions), prior, family, config, rng)?;
    Ok(ChainState { z, pi, beta, emissions, counts })
}

/// Seeds the chain: k-means on windows for `z`, uniform `β`, then `Π` and
/// emissions from their conditionals.
pub fn initialize<R: Rng + ?Sized>(
    data: &LaggedData,
    prior: &StickyHdpPrior,
    family: &EmissionFamily,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<ChainState> {
    prior.validate()?;
    config.validate()?;
    let l = prior.truncation;
    let k = config.init_states.min(l).min(data.len());
    let z = if config.init_context == 0 {
        kmeans_labels(data, k, 25, rng)
    } else {
        kmeans(&context_features(data, config.init_context), k, 25, rng)
    };
    let counts = count_transitions(&z, l)?;
    let beta = vec![1.0 / l as f64; l];
    let pi = sample_transition_rows(&beta, &counts, prior.alpha, prior.lambda, rng)?;
    let emissions = update_emissions(data, &z, None, prior, family, config, rng)?;
    Ok(ChainState { z, pi, beta, emissions, counts })
}

/// Lloyd iterations with k-means++ seeding on the joint (window, target)
/// vectors, so regimes sharing a level but differing in dynamics separate.
pub fn kmeans_labels<R: Rng + ?Sized>(data: &LaggedData, k: usize, iters: usize, rng: &mut R) -> Vec<usize> {
    let n = data.len();
    let points: Vec<Vec<f64>> = (0..n).map(|i| [data.window(i), data.target(i)].concat()).collect();
    kmeans(&points, k, iters, rng)
}

/// Standardized local statistics over `[t-h, t+h]`: mean and spread of each
/// target channel and the lag-one least-squares slope per channel.
pub fn context_features(data: &LaggedData, half_width: usize) -> Vec<Vec<f64>> {
    let n = data.len();
    let d = data.dim();
    let mut feats: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half_width);
            let hi = (t + half_width + 1).min(n);
            let m = (hi - lo) as f64;
            let mut f = Vec::with_capacity(3 * d);
            for c in 0..d {
                let ys: Vec<f64> = (lo..hi).map(|i| data.target(i)[c]).collect();
                let xs: Vec<f64> = (lo..hi).map(|i| data.window(i)[c]).collect();
                let my = ys.iter().sum::<f64>() / m;
                let mx = xs.iter().sum::<f64>() / m;
                let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / m;
                let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / m;
                let cxy = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / m;
                f.push(my);
                f.push(vy.sqrt());
                f.push(if vx > 1e-12 { cxy / vx } else { 0.0 });
            }
            f
        })
        .collect();
    let width = feats.first().map_or(0, Vec::len);
    for c in 0..width {
        let mean = feats.iter().map(|f| f[c]).sum::<f64>() / n as f64;
        let sd = (feats.iter().map(|f| (f[c] - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for f in feats.iter_mut() {
            f[c] = if sd > 0.0 { (f[c] - mean) / sd } else { 0.0 };
        }
    }
    feats
}

/// Plain k-means on row vectors; returns cluster labels.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, iters: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let w = points.first().map_or(0, Vec::len);
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut centroids: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    let mut best_d: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = best_d.iter().sum();
        let next = if total > 0.0 { sample_categorical(&best_d, rng) } else { rng.random_range(0..n) };
        let c = points[next].clone();
        for (p, d) in points.iter().zip(best_d.iter_mut()) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    let mut labels = vec![0usize; n];
    for _ in 0..iters {
        let mut changed = false;
        for (p, lab) in points.iter().zip(labels.iter_mut()) {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = dist2(p, c);
                if d < bd {
                    bd = d;
                    best = j;
                }
            }
            if *lab != best {
                *lab = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; w]; k];
        let mut cnt = vec![0usize; k];
        for (p, &lab) in points.iter().zip(&labels) {
            cnt[lab] += 1;
            for (s, v) in sums[lab].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if cnt[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / cnt[j] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Summary of a retained sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub sweep: usize,
    pub pi: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub occupancy: Vec<usize>,
    pub joint_log_likelihood: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub samples: Vec<ChainSample>,
    /// Retained sweep with the largest joint log-likelihood.
    pub point_estimate: ChainState,
    pub point_estimate_sweep: usize,
    /// Joint log-likelihood after every sweep, burn-in included.
    pub log_lik_trace: Vec<f64>,
    /// Occupied states of the point estimate.
    pub occupied_states: usize,
}

/// Runs burn-in plus retained sweeps from a fresh initialization.
pub fn fit<R: Rng + ?Sized>(
    data: &LaggedData,
    prior: &StickyHdpPrior,
    family: &EmissionFamily,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<FitResult> {
    let init = initialize(data, prior, family, config, rng)?;
    fit_from(init, data, prior, family, config, rng)
}

pub fn fit_from<R: Rng + ?Sized>(
    mut state: ChainState,
    data: &LaggedData,
    prior: &StickyHdpPrior,
    family: &EmissionFamily,
    config: &GibbsConfig,
    rng: &mut R,
) -> Result<FitResult> {
    config.validate()?;
    let mut samples = Vec::new();
    let mut trace = Vec::with_capacity(config.sweeps);
    let mut best: Option<(f64, usize, ChainState)> = None;
    for sweep in 0..config.sweeps {
        state = gibbs_sweep(&state, data, prior, family, config, rng)?;
        let ll = state.joint_log_likelihood(data)?;
        trace.push(ll);
        if sweep >= config.burn_in && (sweep - config.burn_in) % config.thinning == 0 {
            samples.push(ChainSample {
                sweep,
                pi: state.pi.clone(),
                beta: state.beta.clone(),
                occupancy: state.occupancy(),
                joint_log_likelihood: ll,
            });
            if best.as_ref().is_none_or(|(b, _, _)| ll > *b) {
                best = Some((ll, sweep, state.clone()));
            }
        }
    }
    let (_, point_estimate_sweep, point_estimate) = best.expect("at least one retained sweep");
    let occupied_states = point_estimate.occupied_states();
    Ok(FitResult { samples, point_estimate, point_estimate_sweep, log_lik_trace: trace, occupied_states })
}

/// Draws a chain state from the prior for fixed feature maps: `β`, `Π`,
/// emissions and `z`. Used by joint-distribution tests and simulators.
pub fn sample_prior_state<R: Rng + ?Sized>(
    n: usize,
    prior: &StickyHdpPrior,
    maps: &[FeatureMap],
    rng: &mut R,
) -> Result<ChainState> {
    let l = prior.truncation;
    check_len(l, maps.len())?;
    let beta = sample_dirichlet(&vec![prior.gamma / l as f64; l], rng)?;
    let zero = vec![vec![0usize; l]; l];
    let pi = sample_transition_rows(&beta, &zero, prior.alpha, prior.lambda, rng)?;
    let emissions = maps
        .iter()
        .map(|m| {
            let stats = SufficientStats::prior(&prior.emission, m.output_dim())?;
            let (w, s) = EmissionPosterior::new(&stats, &prior.emission)?.sample(rng)?;
            Emission::new(m.clone(), w, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut z = Vec::with_capacity(n);
    z.push(sample_categorical(&beta, rng));
    for t in 1..n {
        z.push(sample_categorical(&pi[z[t - 1]], rng));
    }
    let counts = count_transitions(&z, l)?;
    Ok(ChainState { z, pi, beta, emissions, counts })
}
