//! Few-shot two-class classification with independent per-class emission
//! models, and the training-fraction sweep over subject-disjoint splits.

use std::collections::BTreeSet;
use std::hash::{DefaultHasher, Hash, Hasher};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{
    init_centers_from_prototypes, isotropic, solve_weights_map, Emission, EmissionHyperprior, EmissionPosterior,
    FeatureMap, PrototypeSet, RbfLayer, SufficientStats,
};
use crate::error::{check_len, Error, Result};
use crate::eval::balanced_accuracy;
use crate::linalg::softmax;
use crate::math::{BasisFunction, DistanceMetric};
use crate::rng::sub_rng;
use crate::series::{LaggedData, TimeSeries};

/// Non-seizure / seizure, as class indices.
pub const NEGATIVE: usize = 0;
pub const POSITIVE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassFeatures {
    Rbf { neurons: usize, metric: DistanceMetric, center_spread: f64 },
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModelConfig {
    pub lag: usize,
    pub features: ClassFeatures,
    /// Basis width; `None` picks the median window-to-class-mean distance
    /// over the training windows of both classes.
    pub eta: Option<f64>,
    pub squared_basis: bool,
    pub noise_dof: f64,
    /// `S₀ = noise_scale_frac · var(training targets)`.
    pub noise_scale_frac: f64,
    pub ridge: f64,
    /// MAP weights and posterior-mean noise instead of a posterior draw.
    pub fixed_weights: bool,
}

impl Default for ClassModelConfig {
    fn default() -> Self {
        Self {
            lag: 156,
            features: ClassFeatures::Rbf { neurons: 250, metric: DistanceMetric::Euclidean, center_spread: 0.01 },
            eta: None,
            squared_basis: false,
            noise_dof: 3.0,
            noise_scale_frac: 0.1,
            ridge: 1e-3,
            fixed_weights: true,
        }
    }
}

/// One class's emission model.
#[derive(Debug, Clone)]
pub struct ClassModel {
    pub label: usize,
    pub emission: Emission,
    pub log_prior: f64,
}

impl ClassModel {
    pub fn lag(&self) -> usize {
        self.emission.map().input_width() / self.emission.dim()
    }
}

/// Hyperparameters shared by all class models of one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedPrior {
    pub emission: EmissionHyperprior,
    pub basis: BasisFunction,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Resolves `η` and `S₀` from the pooled training data of all classes.
pub fn shared_prior(classes: &[&LaggedData], config: &ClassModelConfig) -> Result<SharedPrior> {
    let metric = match config.features {
        ClassFeatures::Rbf { metric, .. } => metric,
        ClassFeatures::Linear => DistanceMetric::Euclidean,
    };
    let mut dists = Vec::new();
    let mut targets = Vec::new();
    for data in classes {
        if data.is_empty() {
            return Err(Error::Empty("class training set".into()));
        }
        let mean = data.mean_window(None);
        // at most a few thousand windows per class are enough for a median
        let step = (data.len() / 2000).max(1);
        for i in (0..data.len()).step_by(step) {
            dists.push(metric.distance(data.window(i), &mean)?);
        }
        targets.extend(data.targets().into_iter().flatten());
    }
    let eta = match config.eta {
        Some(e) => e,
        None => median(dists).filter(|m| *m > 0.0).unwrap_or(1.0),
    };
    let basis = if config.squared_basis { BasisFunction::squared_exponential(eta) } else { BasisFunction::gaussian(eta) };
    basis.validate()?;
    let n = targets.len() as f64;
    let mu = targets.iter().sum::<f64>() / n;
    let var = (targets.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).max(1e-12);
    let emission = EmissionHyperprior::new(config.noise_dof, DMatrix::from_element(1, 1, config.noise_scale_frac * var), config.ridge)?;
    Ok(SharedPrior { emission, basis })
}

/// Centers are perturbed copies of the class prototype mean; weights and
/// noise from the conjugate posterior on all class windows.
pub fn train_class_model<R: Rng + ?Sized>(
    data: &LaggedData,
    label: usize,
    classes: usize,
    config: &ClassModelConfig,
    shared: &SharedPrior,
    rng: &mut R,
) -> Result<ClassModel> {
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    check_len(config.lag, data.lag())?;
    let map = match config.features {
        ClassFeatures::Linear => FeatureMap::Linear { width: data.width() },
        ClassFeatures::Rbf { neurons, metric, center_spread } => {
            let protos = PrototypeSet::from_lagged(format!("class-{label}"), data)?;
            let var = (center_spread * protos.pooled_variance()).max(1e-12);
            let centers = init_centers_from_prototypes(&protos, neurons, &isotropic(data.width(), var), rng)?;
            FeatureMap::Rbf(RbfLayer::new(centers, shared.basis, metric)?)
        }
    };
    let mut stats = SufficientStats::prior(&shared.emission, map.output_dim())?;
    let all: Vec<usize> = (0..data.len()).collect();
    stats.add_rows(data, &map, &all)?;
    let post = EmissionPosterior::new(&stats, &shared.emission)?;
    let (w, sigma) = if config.fixed_weights {
        let sigma = post.noise.mean().ok_or_else(|| Error::InvalidParameter("noise posterior has no mean".into()))?;
        (solve_weights_map(&stats)?, sigma)
    } else {
        post.sample(rng)?
    };
    Ok(ClassModel { label, emission: Emission::new(map, w, sigma)?, log_prior: -(classes as f64).ln() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub scores: Vec<f64>,
    pub confidence: Vec<f64>,
    pub predicted: usize,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

fn check_models(models: &[ClassModel]) -> Result<usize> {
    if models.len() < 2 {
        return Err(Error::InvalidParameter("need at least two class models".into()));
    }
    let lag = models[0].lag();
    for m in models {
        check_len(lag, m.lag())?;
    }
    Ok(lag)
}

/// Score per class = log-likelihood + log prior; confidence = softmax.
pub fn classify_window(y: &[f64], window: &[f64], models: &[ClassModel]) -> Result<WindowResult> {
    check_models(models)?;
    let scores = models
        .iter()
        .map(|m| {
            let mut phi = vec![0.0; m.emission.neurons()];
            Ok(m.emission.log_likelihood_slice(y, window, &mut phi)? + m.log_prior)
        })
        .collect::<Result<Vec<f64>>>()?;
    let confidence = softmax(&scores);
    let predicted = models[argmax(&scores)].label;
    Ok(WindowResult { scores, confidence, predicted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Summed per-window log-likelihoods.
    Sum,
    /// Majority of per-window decisions; ties go to the higher summed score.
    Vote,
}

/// Classifies a whole segment from its windows. Confidence is the softmax of
/// summed scores for `Sum` and the vote shares for `Vote`.
pub fn classify_segment(segment: &TimeSeries, models: &[ClassModel], aggregation: Aggregation) -> Result<WindowResult> {
    let lag = check_models(models)?;
    let data = LaggedData::build(segment, lag)?;
    let mut summed = vec![0.0; models.len()];
    let mut votes = vec![0.0; models.len()];
    let mut phis: Vec<Vec<f64>> = models.iter().map(|m| vec![0.0; m.emission.neurons()]).collect();
    for t in 0..data.len() {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, m) in models.iter().enumerate() {
            let s = m.emission.log_likelihood_slice(data.target(t), data.window(t), &mut phis[c])? + m.log_prior;
            summed[c] += s - m.log_prior;
            if s > best_score {
                best_score = s;
                best = c;
            }
        }
        votes[best] += 1.0;
    }
    for (c, m) in models.iter().enumerate() {
        summed[c] += m.log_prior;
    }
    let (confidence, winner) = match aggregation {
        Aggregation::Sum => (softmax(&summed), argmax(&summed)),
        Aggregation::Vote => {
            let top = votes.iter().cloned().fold(0.0, f64::max);
            let tied: Vec<usize> = (0..models.len()).filter(|&c| votes[c] == top).collect();
            let winner = *tied.iter().max_by(|a, b| summed[**a].total_cmp(&summed[**b])).unwrap();
            let total: f64 = votes.iter().sum();
            (votes.iter().map(|v| v / total).collect(), winner)
        }
    };
    Ok(WindowResult { scores: summed, confidence, predicted: models[winner].label })
}

/// Univariate labeled segments with subject identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDataset {
    pub segments: Vec<Vec<f64>>,
    /// Binary labels: [`NEGATIVE`] or [`POSITIVE`].
    pub labels: Vec<usize>,
    pub subjects: Vec<u32>,
    pub sampling_rate: f64,
}

impl SegmentDataset {
    pub fn validate(&self) -> Result<()> {
        check_len(self.segments.len(), self.labels.len())?;
        check_len(self.segments.len(), self.subjects.len())?;
        if let Some(&bad) = self.labels.iter().find(|&&l| l > POSITIVE) {
            return Err(Error::StateOutOfRange { state: bad, states: 2 });
        }
        Ok(())
    }

    pub fn subject_ids(&self) -> Vec<u32> {
        self.subjects.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn series(&self, i: usize) -> TimeSeries {
        TimeSeries::univariate(self.segments[i].clone()).with_sampling_rate(self.sampling_rate)
    }

    fn lagged(&self, rows: &[usize], lag: usize) -> Result<LaggedData> {
        let parts = rows.iter().map(|&i| LaggedData::build(&self.series(i), lag)).collect::<Result<Vec<_>>>()?;
        LaggedData::concat(&parts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitProtocol {
    pub fractions: Vec<f64>,
    pub held_out_subjects: usize,
    pub repeats: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
}

impl Default for SplitProtocol {
    fn default() -> Self {
        Self {
            fractions: vec![0.001, 0.003, 0.01, 0.05, 0.2, 0.4, 0.6, 0.8],
            held_out_subjects: 5,
            repeats: 20,
            seed: 0,
            aggregation: Aggregation::Sum,
        }
    }
}

impl SplitProtocol {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::InvalidParameter(format!("training fraction {f} outside (0, 1]")));
        }
        if self.repeats == 0 || self.held_out_subjects == 0 {
            return Err(Error::InvalidParameter("repeats and held-out subjects must be positive".into()));
        }
        Ok(())
    }
}

/// Held-out subjects (seeded once per protocol) and the row indices of the
/// validation set and of the training pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSplit {
    pub held_out: Vec<u32>,
    pub validation: Vec<usize>,
    pub pool: Vec<usize>,
}

pub fn subject_split(dataset: &SegmentDataset, protocol: &SplitProtocol) -> Result<SubjectSplit> {
    let mut ids = dataset.subject_ids();
    if ids.len() <= protocol.held_out_subjects {
        return Err(Error::InsufficientData { needed: protocol.held_out_subjects + 1, got: ids.len() });
    }
    ids.shuffle(&mut sub_rng(protocol.seed, &[0x5b]));
    let mut held_out = ids[..protocol.held_out_subjects].to_vec();
    held_out.sort();
    let (validation, pool) = (0..dataset.segments.len()).partition(|&i| held_out.contains(&dataset.subjects[i]));
    Ok(SubjectSplit { held_out, validation, pool })
}

/// One cell of the sweep. `balanced_accuracy` is `None` for skipped cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub repeat: usize,
    pub balanced_accuracy: Option<f64>,
    pub skipped: Option<String>,
    pub train_negative: usize,
    pub train_positive: usize,
    pub validation_segments: usize,
    /// Hash of the sorted training row indices.
    pub train_hash: u64,
    /// Positive-class confidence and truth per validation segment.
    #[serde(skip)]
    pub confidences: Vec<(f64, usize)>,
}

/// Draws `floor(fraction · n_c)` rows of each class from the pool.
pub fn stratified_subset<R: Rng + ?Sized>(dataset: &SegmentDataset, pool: &[usize], fraction: f64, rng: &mut R) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut rows: Vec<usize> = pool.iter().cloned().filter(|&i| dataset.labels[i] == c).collect();
        let take = (fraction * rows.len() as f64).floor() as usize;
        rows.shuffle(rng);
        rows.truncate(take);
        rows.sort();
        *slot = rows;
    }
    out
}

fn hash_rows(rows: &[usize]) -> u64 {
    let mut h = DefaultHasher::new();
    rows.hash(&mut h);
    h.finish()
}

/// Trains both class models on `train` rows and scores the `validation` rows.
pub fn evaluate_split<R: Rng + ?Sized>(
    dataset: &SegmentDataset,
    train: &[Vec<usize>; 2],
    validation: &[usize],
    config: &ClassModelConfig,
    aggregation: Aggregation,
    rng: &mut R,
) -> Result<(f64, Vec<(f64, usize)>)> {
    let data = [dataset.lagged(&train[0], config.lag)?, dataset.lagged(&train[1], config.lag)?];
    let shared = shared_prior(&[&data[0], &data[1]], config)?;
    let models = vec![
        train_class_model(&data[0], NEGATIVE, 2, config, &shared, rng)?,
        train_class_model(&data[1], POSITIVE, 2, config, &shared, rng)?,
    ];
    let results = validation
        .par_iter()
        .map(|&i| classify_segment(&dataset.series(i), &models, aggregation))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<usize> = validation.iter().map(|&i| dataset.labels[i]).collect();
    let predicted: Vec<usize> = results.iter().map(|r| r.predicted).collect();
    let ba = balanced_accuracy(&predicted, &truth, 2)?;
    let conf = results.iter().zip(&truth).map(|(r, &t)| (r.confidence[POSITIVE], t)).collect();
    Ok((ba, conf))
}

/// Fraction × repeat grid, each cell with its own sub-seeded generator.
pub fn run_split_sweep(dataset: &SegmentDataset, protocol: &SplitProtocol, config: &ClassModelConfig) -> Result<Vec<SweepRow>> {
    dataset.validate()?;
    protocol.validate()?;
    let split = subject_split(dataset, protocol)?;
    if let Some(c) = (0..2).find(|&c| !split.validation.iter().any(|&i| dataset.labels[i] == c)) {
        return Err(Error::Empty(format!("held-out subjects contain no segments of class {c}")));
    }
    let cells: Vec<(usize, f64, usize)> = protocol
        .fractions
        .iter()
        .enumerate()
        .flat_map(|(fi, &f)| (0..protocol.repeats).map(move |r| (fi, f, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(fi, fraction, repeat)| {
            let mut rng = sub_rng(protocol.seed, &[1, fi as u64, repeat as u64]);
            let train = stratified_subset(dataset, &split.pool, fraction, &mut rng);
            let all: Vec<usize> = train.concat();
            let mut row = SweepRow {
                fraction,
                repeat,
                balanced_accuracy: None,
                skipped: None,
                train_negative: train[0].len(),
                train_positive: train[1].len(),
                validation_segments: split.validation.len(),
                train_hash: hash_rows(&all),
                confidences: Vec::new(),
            };
            if let Some(c) = (0..2).find(|&c| train[c].is_empty()) {
                row.skipped = Some(format!("no training segments for class {c}"));
                return Ok(row);
            }
            let (ba, conf) = evaluate_split(dataset, &train, &split.validation, config, protocol.aggregation, &mut rng)?;
            row.balanced_accuracy = Some(ba);
            row.confidences = conf;
            Ok(row)
        })
        .collect()
}

/// Mean balanced accuracy per fraction over non-skipped repeats.
pub fn mean_by_fraction(rows: &[SweepRow]) -> Vec<(f64, Option<f64>, usize)> {
    let mut fractions: Vec<f64> = Vec::new();
    for r in rows {
        if !fractions.contains(&r.fraction) {
            fractions.push(r.fraction);
        }
    }
    fractions
        .into_iter()
        .map(|f| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.fraction == f).filter_map(|r| r.balanced_accuracy).collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            (f, mean, vals.len())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    /// Mean of the available class recalls.
    pub balanced_accuracy: f64,
    pub positive_recall: Option<f64>,
    pub negative_recall: Option<f64>,
}

/// Predict positive iff positive confidence ≥ τ.
pub fn threshold_sweep(confidences: &[(f64, usize)], thresholds: &[f64]) -> Vec<ThresholdPoint> {
    thresholds
        .iter()
        .map(|&tau| {
            let recall = |class: usize| {
                let members: Vec<f64> = confidences.iter().filter(|(_, t)| *t == class).map(|(c, _)| *c).collect();
                (!members.is_empty()).then(|| {
                    let hits = members.iter().filter(|&&c| (c >= tau) == (class == POSITIVE)).count();
                    hits as f64 / members.len() as f64
                })
            };
            let (pos, neg) = (recall(POSITIVE), recall(NEGATIVE));
            let avail: Vec<f64> = [pos, neg].into_iter().flatten().collect();
            let ba = if avail.is_empty() { 0.0 } else { avail.iter().sum::<f64>() / avail.len() as f64 };
            ThresholdPoint { threshold: tau, balanced_accuracy: ba, positive_recall: pos, negative_recall: neg }
        })
        .collect()
}

/// Two-class AR(2) segments with distinct spectral peaks, grouped by subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoClassArConfig {
    pub subjects: usize,
    pub segments_per_subject: usize,
    pub segment_len: usize,
    /// Fraction of positive segments per subject.
    pub positive_share: f64,
    /// Peak frequencies (Hz) of the negative and positive classes.
    pub peak_hz: [f64; 2],
    /// Pole radius of both AR(2) classes.
    pub pole_radius: f64,
    pub sampling_rate: f64,
}

impl Default for TwoClassArConfig {
    fn default() -> Self {
        Self {
            subjects: 20,
            segments_per_subject: 10,
            segment_len: 178,
            positive_share: 0.2,
            peak_hz: [10.0, 25.0],
            pole_radius: 0.95,
            sampling_rate: 173.61,
        }
    }
}

impl TwoClassArConfig {
    /// AR(2) coefficients with poles at `radius · e^{±i2πf/fs}`.
    pub fn coefficients(&self, class: usize) -> [f64; 2] {
        let w = 2.0 * std::f64::consts::PI * self.peak_hz[class] / self.sampling_rate;
        [2.0 * self.pole_radius * w.cos(), -self.pole_radius * self.pole_radius]
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> SegmentDataset {
        use rand_distr::{Distribution, StandardNormal};
        let per_subject_pos = (self.positive_share * self.segments_per_subject as f64).round() as usize;
        let mut ds = SegmentDataset { segments: vec![], labels: vec![], subjects: vec![], sampling_rate: self.sampling_rate };
        let burn = 100;
        for s in 0..self.subjects {
            for k in 0..self.segments_per_subject {
                let class = if k < per_subject_pos { POSITIVE } else { NEGATIVE };
                let a = self.coefficients(class);
                let mut y = vec![0.0, 0.0];
                for t in 2..self.segment_len + burn {
                    let e: f64 = StandardNormal.sample(rng);
                    y.push(a[0] * y[t - 1] + a[1] * y[t - 2] + e);
                }
                ds.segments.push(y[burn..].to_vec());
                ds.labels.push(class);
                ds.subjects.push(s as u32);
            }
        }
        ds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn small_config(lag: usize, neurons: usize) -> ClassModelConfig {
        ClassModelConfig {
            lag,
            features: ClassFeatures::Rbf { neurons, metric: DistanceMetric::Euclidean, center_spread: 0.01 },
            ..Default::default()
        }
    }

    fn train_pair(ds: &SegmentDataset, cfg: &ClassModelConfig, seed: u64) -> Vec<ClassModel> {
        let rows: [Vec<usize>; 2] = [
            (0..ds.labels.len()).filter(|&i| ds.labels[i] == 0).collect(),
            (0..ds.labels.len()).filter(|&i| ds.labels[i] == 1).collect(),
        ];
        let data = [ds.lagged(&rows[0], cfg.lag).unwrap(), ds.lagged(&rows[1], cfg.lag).unwrap()];
        let shared = shared_prior(&[&data[0], &data[1]], cfg).unwrap();
        let mut rng = seeded(seed);
        vec![
            train_class_model(&data[0], 0, 2, cfg, &shared, &mut rng).unwrap(),
            train_class_model(&data[1], 1, 2, cfg, &shared, &mut rng).unwrap(),
        ]
    }

    #[test]
    fn sine_class_self_prediction() {
        let y: Vec<f64> = (0..600).map(|t| (2.0 * std::f64::consts::PI * t as f64 / 25.0).sin()).collect();
        let data = LaggedData::build(&TimeSeries::univariate(y.clone()), 8).unwrap();
        let cfg = ClassModelConfig { eta: None, ..small_config(8, 30) };
        let shared = shared_prior(&[&data], &cfg).unwrap();
        let model = train_class_model(&data, 0, 2, &cfg, &shared, &mut seeded(1)).unwrap();
        let mut err = 0.0;
        for t in 0..data.len() {
            let pred = model.emission.predict_mean(&data.window_owned(t)).unwrap()[0];
            err += (pred - data.target(t)[0]).powi(2);
        }
        let var = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        assert!(err / data.len() as f64 / var < 0.1);
    }

    #[test]
    fn single_neuron_model_trains() {
        let ds = TwoClassArConfig { subjects: 2, ..Default::default() }.generate(&mut seeded(2));
        train_pair(&ds, &small_config(4, 1), 3);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = TwoClassArConfig { subjects: 2, ..Default::default() }.generate(&mut seeded(2));
        let cfg = ClassModelConfig { fixed_weights: false, ..small_config(4, 5) };
        let a = train_pair(&ds, &cfg, 4);
        let b = train_pair(&ds, &cfg, 4);
        assert_eq!(a[0].emission.weights(), b[0].emission.weights());
        assert_eq!(a[1].emission.noise_cov(), b[1].emission.noise_cov());
    }

    #[test]
    fn identical_models_give_even_confidence() {
        let ds = TwoClassArConfig { subjects: 2, ..Default::default() }.generate(&mut seeded(5));
        let models = train_pair(&ds, &small_config(4, 5), 6);
        let twin = vec![models[0].clone(), ClassModel { label: 1, ..models[0].clone() }];
        let r = classify_window(&[0.3], &[0.1, 0.2, -0.1, 0.0], &twin).unwrap();
        assert!((r.confidence[0] - 0.5).abs() < 1e-12 && (r.confidence[1] - 0.5).abs() < 1e-12);
        assert!((r.confidence.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_model_wins_confidently() {
        let ds = TwoClassArConfig { subjects: 2, ..Default::default() }.generate(&mut seeded(5));
        let models = train_pair(&ds, &small_config(4, 5), 6);
        let boosted = vec![ClassModel { log_prior: models[0].log_prior + 10.0, ..models[0].clone() }, ClassModel { label: 1, ..models[0].clone() }];
        let r = classify_window(&[0.3], &[0.1, 0.2, -0.1, 0.0], &boosted).unwrap();
        assert!(r.confidence[0] > 0.9999);
        assert_eq!(r.predicted, 0);
    }

    #[test]
    fn one_window_segment_equals_window_result() {
        let ds = TwoClassArConfig { subjects: 2, ..Default::default() }.generate(&mut seeded(7));
        let models = train_pair(&ds, &small_config(4, 5), 8);
        let seg = TimeSeries::univariate(vec![0.5, -0.2, 0.1, 0.7, 0.3]);
        let s = classify_segment(&seg, &models, Aggregation::Sum).unwrap();
        let w = classify_window(&[0.3], &[0.7, 0.1, -0.2, 0.5], &models).unwrap();
        for (a, b) in s.confidence.iter().zip(&w.confidence) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.predicted, w.predicted);
        assert!(classify_segment(&TimeSeries::univariate(vec![0.0; 4]), &models, Aggregation::Sum).is_err());
    }

    #[test]
    fn ar_classes_are_separated_and_aggregations_agree() {
        let cfg_data = TwoClassArConfig { subjects: 6, ..Default::default() };
        let train = cfg_data.generate(&mut seeded(9));
        let test = cfg_data.generate(&mut seeded(10));
        let models = train_pair(&train, &small_config(8, 20), 11);
        let (mut sum_hits, mut agree) = (0, 0);
        for i in 0..test.segments.len() {
            let a = classify_segment(&test.series(i), &models, Aggregation::Sum).unwrap();
            let b = classify_segment(&test.series(i), &models, Aggregation::Vote).unwrap();
            sum_hits += (a.predicted == test.labels[i]) as usize;
            agree += (a.predicted == b.predicted) as usize;
        }
        let n = test.segments.len();
        assert!(sum_hits as f64 / n as f64 > 0.95);
        assert!(agree as f64 / n as f64 > 0.95);
    }

    #[test]
    fn tiny_fraction_is_skipped_and_held_out_subjects_stay_out() {
        let ds = TwoClassArConfig { subjects: 12, ..Default::default() }.generate(&mut seeded(12));
        let protocol = SplitProtocol { fractions: vec![0.01, 0.5], repeats: 3, seed: 1, ..Default::default() };
        let split = subject_split(&ds, &protocol).unwrap();
        let rows = run_split_sweep(&ds, &protocol, &small_config(4, 5)).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().filter(|r| r.fraction == 0.01).all(|r| r.skipped.is_some()));
        assert!(rows.iter().filter(|r| r.fraction == 0.5).all(|r| r.balanced_accuracy.is_some()));
        let hashes: BTreeSet<u64> = rows.iter().filter(|r| r.fraction == 0.5).map(|r| r.train_hash).collect();
        assert_eq!(hashes.len(), 3);
        // every training row comes from the pool
        for r in 0..3 {
            let mut rng = sub_rng(protocol.seed, &[1, 1, r as u64]);
            let train = stratified_subset(&ds, &split.pool, 0.5, &mut rng);
            for &i in train.iter().flatten() {
                assert!(!split.held_out.contains(&ds.subjects[i]));
            }
        }
        let again = run_split_sweep(&ds, &protocol, &small_config(4, 5)).unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn larger_fraction_trains_on_more_rows_and_separates() {
        let ds = TwoClassArConfig { subjects: 15, ..Default::default() }.generate(&mut seeded(13));
        let protocol = SplitProtocol { fractions: vec![0.05, 0.4], repeats: 4, seed: 2, ..Default::default() };
        let rows = run_split_sweep(&ds, &protocol, &small_config(6, 10)).unwrap();
        for r in &rows {
            let scale = if r.fraction == 0.05 { 1 } else { 8 };
            assert_eq!((r.train_negative, r.train_positive), (4 * scale, scale));
        }
        let means = mean_by_fraction(&rows);
        assert!(means[1].1.unwrap() >= 0.9);
    }

    #[test]
    fn threshold_extremes_and_map_equivalence() {
        let conf = vec![(0.9, 1), (0.2, 0), (0.6, 0), (0.4, 1), (0.5, 1)];
        let pts = threshold_sweep(&conf, &[0.0, 0.5, 1.0 + 1e-9]);
        assert_eq!(pts[0].positive_recall, Some(1.0));
        assert_eq!(pts[0].negative_recall, Some(0.0));
        assert_eq!(pts[2].positive_recall, Some(0.0));
        assert_eq!(pts[2].negative_recall, Some(1.0));
        // τ = 0.5 is the MAP rule on two classes
        let map_pred: Vec<usize> = conf.iter().map(|(c, _)| (*c >= 0.5) as usize).collect();
        let truth: Vec<usize> = conf.iter().map(|(_, t)| *t).collect();
        assert!((pts[1].balanced_accuracy - balanced_accuracy(&map_pred, &truth, 2).unwrap()).abs() < 1e-12);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let distinct: BTreeSet<u64> = threshold_sweep(&conf, &grid).iter().map(|p| p.balanced_accuracy.to_bits()).collect();
        assert!(distinct.len() <= conf.len() + 1);
    }
}
