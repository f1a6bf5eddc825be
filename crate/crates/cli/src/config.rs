//! Run configuration: one TOML file with a flat key-value section per module.
//!
//! Every command writes the fully resolved configuration (flags applied) to
//! `config.toml` in its output directory, so a run can be repeated from its
//! artifacts alone.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;
use rbfihmm::classifier::{Aggregation, ClassFeatures, ClassModelConfig, SplitProtocol, TwoClassArConfig};
use rbfihmm::emission::EmissionHyperprior;
use rbfihmm::hdp::{EmissionFamily, GibbsConfig, RbfFamily, StickyHdpPrior};
use rbfihmm::math::{BasisFunction, DistanceMetric};
use rbfihmm::series::LaggedData;
use rbfihmm::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub synth: SynthConfig,
    pub model: ModelSection,
    pub sampler: SamplerSection,
    pub classify: ClassifySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    pub threads: usize,
    pub out: String,
    /// Series CSV read by `fit`; empty reads `series.csv` from `out`.
    pub series: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0, threads: 0, out: "run".into(), series: String::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `exp(-d / η)`.
    Gaussian,
    /// `exp(-d² / (2η))`.
    SquaredExponential,
}

impl BasisKind {
    pub fn with_eta(self, eta: f64) -> BasisFunction {
        match self {
            BasisKind::Gaussian => BasisFunction::gaussian(eta),
            BasisKind::SquaredExponential => BasisFunction::squared_exponential(eta),
        }
    }
}

/// Sticky HDP-HMM hyperparameters and emission families for `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Families to fit: `rbf` (RBF-iHMM) and/or `ar` (linear AR-iHMM).
    pub families: Vec<String>,
    /// Family whose metrics are reported at the top level of `metrics.json`.
    pub primary: String,
    pub lag: usize,
    pub truncation: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub noise_dof: f64,
    /// `S₀ = noise_scale_frac · var(series)`.
    pub noise_scale_frac: f64,
    pub ridge: f64,
    pub neurons: usize,
    pub basis: BasisKind,
    /// `η = eta_scale · sd(series)`.
    pub eta_scale: f64,
    pub metric: DistanceMetric,
    pub center_spread: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            families: vec!["rbf".into(), "ar".into()],
            primary: "rbf".into(),
            lag: 1,
            truncation: 20,
            gamma: 1.0,
            alpha: 1.0,
            lambda: 10.0,
            noise_dof: 3.0,
            noise_scale_frac: 0.1,
            ridge: 1e-3,
            neurons: 10,
            basis: BasisKind::Gaussian,
            eta_scale: 1.0,
            metric: DistanceMetric::Euclidean,
            center_spread: 1.0,
        }
    }
}

pub const FAMILIES: [&str; 2] = ["rbf", "ar"];

impl ModelSection {
    pub fn prior(&self, series_var: f64) -> Result<StickyHdpPrior> {
        let scale = DMatrix::from_element(1, 1, self.noise_scale_frac * series_var.max(1e-12));
        let prior = StickyHdpPrior {
            gamma: self.gamma,
            alpha: self.alpha,
            lambda: self.lambda,
            truncation: self.truncation,
            emission: EmissionHyperprior::new(self.noise_dof, scale, self.ridge)?,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn family(&self, name: &str, data: &LaggedData, series_sd: f64) -> Result<EmissionFamily> {
        match name {
            "rbf" => {
                let basis = self.basis.with_eta(self.eta_scale * series_sd.max(1e-12));
                basis.validate()?;
                Ok(EmissionFamily::Rbf(RbfFamily::from_data(data, self.neurons, basis, self.metric, self.center_spread)))
            }
            "ar" => Ok(EmissionFamily::Linear),
            other => Err(CliError::Config(format!("unknown model family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub center_resampling: bool,
    pub fixed_weights: bool,
    pub init_states: usize,
    pub init_context: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let g = GibbsConfig::default();
        Self {
            sweeps: g.sweeps,
            burn_in: g.burn_in,
            thinning: g.thinning,
            center_resampling: g.center_resampling,
            fixed_weights: g.fixed_weights,
            init_states: 8,
            init_context: 3,
        }
    }
}

impl SamplerSection {
    pub fn gibbs(&self) -> GibbsConfig {
        GibbsConfig {
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            center_resampling: self.center_resampling,
            fixed_weights: self.fixed_weights,
            thinning: self.thinning,
            init_states: self.init_states,
            init_context: self.init_context,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Rbf,
    Linear,
}

/// One class-model variant evaluated by `classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierModel {
    pub name: String,
    pub kind: ClassifierKind,
    #[serde(default)]
    pub neurons: usize,
    #[serde(default)]
    pub metric: DistanceMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    /// UCI seizure CSV; empty uses the synthetic two-class AR data below.
    pub dataset: String,
    pub label_column: String,
    /// Row-identifier column carrying subject identity; empty derives 100
    /// pseudo-subjects from contiguous row blocks.
    pub id_column: String,
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub held_out_subjects: usize,
    pub aggregation: Aggregation,
    pub lag: usize,
    /// Basis width; 0 picks the median window-to-class-mean distance.
    pub eta: f64,
    pub basis: BasisKind,
    pub center_spread: f64,
    pub noise_dof: f64,
    pub noise_scale_frac: f64,
    pub ridge: f64,
    pub fixed_weights: bool,
    pub histogram_bins: usize,
    pub threshold_steps: usize,
    /// Spectral feature estimator: 0 = Hann periodogram, otherwise the AR order.
    pub spectral_ar_order: usize,
    pub kde_points: usize,
    pub models: Vec<ClassifierModel>,
    pub synthetic: TwoClassArConfig,
}

impl Default for ClassifySection {
    fn default() -> Self {
        let protocol = SplitProtocol::default();
        let model = ClassModelConfig::default();
        Self {
            dataset: String::new(),
            label_column: "y".into(),
            id_column: String::new(),
            fractions: protocol.fractions,
            repeats: protocol.repeats,
            held_out_subjects: protocol.held_out_subjects,
            aggregation: protocol.aggregation,
            lag: model.lag,
            eta: 0.0,
            basis: BasisKind::Gaussian,
            center_spread: 0.01,
            noise_dof: model.noise_dof,
            noise_scale_frac: model.noise_scale_frac,
            ridge: model.ridge,
            fixed_weights: model.fixed_weights,
            histogram_bins: 10,
            threshold_steps: 20,
            spectral_ar_order: 0,
            kde_points: 128,
            models: vec![
                ClassifierModel { name: "rbf".into(), kind: ClassifierKind::Rbf, neurons: 250, metric: DistanceMetric::Euclidean },
                ClassifierModel { name: "ar".into(), kind: ClassifierKind::Linear, neurons: 0, metric: DistanceMetric::Euclidean },
            ],
            synthetic: TwoClassArConfig::default(),
        }
    }
}

impl ClassifySection {
    pub fn protocol(&self, seed: u64) -> SplitProtocol {
        SplitProtocol {
            fractions: self.fractions.clone(),
            held_out_subjects: self.held_out_subjects,
            repeats: self.repeats,
            seed,
            aggregation: self.aggregation,
        }
    }

    pub fn model_config(&self, model: &ClassifierModel) -> ClassModelConfig {
        let features = match model.kind {
            ClassifierKind::Rbf => ClassFeatures::Rbf { neurons: model.neurons, metric: model.metric, center_spread: self.center_spread },
            ClassifierKind::Linear => ClassFeatures::Linear,
        };
        ClassModelConfig {
            lag: self.lag,
            features,
            eta: (self.eta > 0.0).then_some(self.eta),
            squared_basis: self.basis == BasisKind::SquaredExponential,
            noise_dof: self.noise_dof,
            noise_scale_frac: self.noise_scale_frac,
            ridge: self.ridge,
            fixed_weights: self.fixed_weights,
        }
    }
}

fn as_config(e: CliError) -> CliError {
    match e {
        CliError::Model(m) => CliError::Config(format!("model: {m}")),
        other => other,
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                if !p.exists() {
                    return Err(CliError::MissingInput(p.to_path_buf()));
                }
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::InvalidInput { path: p.to_path_buf(), message: e.to_string() })?;
                Self::from_toml_str(&text)
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        // TOML integers are signed 64-bit
        check(self.run.seed <= i64::MAX as u64, || format!("seed {} exceeds {}", self.run.seed, i64::MAX))?;
        check(!self.run.out.is_empty(), || "run.out must name a directory".into())?;

        let m = &self.model;
        check(!m.families.is_empty(), || "model.families is empty".into())?;
        let mut seen = BTreeSet::new();
        for f in &m.families {
            check(FAMILIES.contains(&f.as_str()), || format!("unknown model family '{f}' (expected rbf or ar)"))?;
            check(seen.insert(f), || format!("model family '{f}' listed twice"))?;
        }
        check(m.families.contains(&m.primary), || format!("model.primary '{}' is not in model.families", m.primary))?;
        check(m.lag >= 1, || "model.lag must be at least 1".into())?;
        check(m.neurons >= 1, || "model.neurons must be at least 1".into())?;
        check(m.eta_scale > 0.0, || "model.eta_scale must be positive".into())?;
        check(m.center_spread > 0.0, || "model.center_spread must be positive".into())?;
        check(m.noise_scale_frac > 0.0, || "model.noise_scale_frac must be positive".into())?;
        self.model.prior(1.0).map_err(as_config)?;

        self.sampler.gibbs().validate().map_err(|e| CliError::Config(format!("sampler: {e}")))?;
        let s = &self.synth;
        check(s.states >= 1 && s.lag >= 1 && s.neurons >= 1, || "synth.states, lag and neurons must be positive".into())?;
        check(s.length > s.lag, || "synth.length must exceed synth.lag".into())?;
        check((0.0..=1.0).contains(&s.self_transition), || "synth.self_transition must lie in [0, 1]".into())?;

        let c = &self.classify;
        check(!c.fractions.is_empty(), || "classify.fractions is empty".into())?;
        for f in &c.fractions {
            check(*f > 0.0 && *f <= 1.0, || format!("classify fraction {f} outside (0, 1]"))?;
        }
        check(c.repeats >= 1, || "classify.repeats must be at least 1".into())?;
        check(c.held_out_subjects >= 1, || "classify.held_out_subjects must be at least 1".into())?;
        check(c.lag >= 1, || "classify.lag must be at least 1".into())?;
        check(c.histogram_bins >= 1 && c.threshold_steps >= 1, || "histogram_bins and threshold_steps must be positive".into())?;
        check(!c.label_column.is_empty(), || "classify.label_column is empty".into())?;
        check(!c.models.is_empty(), || "classify.models is empty".into())?;
        let mut names = BTreeSet::new();
        for model in &c.models {
            let valid_name = !model.name.is_empty() && model.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_');
            check(valid_name, || format!("classifier model name '{}' must be non-empty [A-Za-z0-9_-]", model.name))?;
            check(names.insert(&model.name), || format!("classifier model '{}' listed twice", model.name))?;
            check(model.kind == ClassifierKind::Linear || model.neurons >= 1, || format!("classifier model '{}' needs neurons ≥ 1", model.name))?;
        }
        Ok(())
    }
}
