//! Deterministic numerical primitives: distances, radial basis functions,
//! the AR power spectral density and the composite RBF-network kernel.

mod basis;
mod distance;
mod kernel;
mod psd;

pub use basis::BasisFunction;
pub use distance::DistanceMetric;
pub use kernel::CompositeKernelParams;
pub use psd::ar_psd;
