//! Sticky HDP-HMM with prototype-defined RBF autoregressive emissions.
//!
//! The crate is organized bottom-up:
//!
//! - [`math`], [`sampling`], [`linalg`]: distances, basis functions, AR
//!   spectra, distribution samplers.
//! - [`series`]: time series and lagged autoregressive designs.
//! - [`emission`]: RBF / linear AR emissions with conjugate updates.
//! - [`hdp`]: the sticky HDP-HMM blocked Gibbs sampler.
//! - [`synth`]: switching RBF-AR data generator.
//! - [`classifier`]: few-shot two-class models and split protocol.
//! - [`eval`]: state matching, transition MSE, balanced accuracy,
//!   spectral features, confidence histograms.

pub mod classifier;
pub mod emission;
pub mod error;
pub mod eval;
pub mod hdp;
pub mod linalg;
pub mod math;
pub mod rng;
pub mod sampling;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
