//! Semi-supervised infinite Gaussian mixture clustering.
//!
//! A Dirichlet-process mixture of Gaussians with Normal-inverse-Wishart
//! priors, fit by collapsed Gibbs sampling. Partially observed labels act as
//! cannot-link constraints between differently labeled points; clusters that
//! end up holding only unlabeled points are reported as undefined classes
//! (mapped label `0`).
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the CLI uses.

pub mod baseline;
pub mod data;
pub mod error;
pub mod experiment;
pub mod math;
pub mod metrics;
pub mod niw;
pub mod partition;
pub mod sampler;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SymMatrix64 = math::SymMatrix<f64>;
pub type NiwHyper64 = niw::NiwHyper<f64>;
pub type SuffStats64 = niw::SuffStats<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type PartitionState64 = partition::PartitionState<f64>;
pub type SamplerConfig64 = sampler::SamplerConfig<f64>;
pub type FitResult64 = sampler::FitResult<f64>;
pub type SsgmmFit64 = baseline::SsgmmFit<f64>;
