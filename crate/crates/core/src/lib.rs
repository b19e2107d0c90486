//! Bayesian model-averaged benchmark dose estimation for quantal
//! dose-response data.

pub mod averaging;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod models;
pub mod pipeline;
pub mod priors;
pub mod sampler;
pub mod screen;
pub mod simulate;
pub mod special;

pub use data::QuantalDataset;
pub use error::{Error, Result};
pub use models::{Benchmark, BetaVector, ModelId, ThetaVector};
