//! Active-subspace Pareto tracing for two competing objectives.
//!
//! Pipeline: sample the log-scaled parameter box, estimate averaged gradient
//! outer products, pick active subspaces, mix them along a Grassmann geodesic,
//! fit quadratic ridge surrogates, and trace the Pareto set of the weighted
//! scalarization in closed form or by ODE continuation.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` and `*32`
//! aliases below fix the scalar.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coexistence;
pub mod domain;
pub mod error;
pub mod exec;
pub mod gradients;
pub mod grassmann;
pub mod linalg;
pub mod objective;
pub mod pareto;
pub mod scalar;
pub mod subspace;
pub mod synthetic;

pub use error::{Error, Result};
pub use exec::Execution;
pub use scalar::Real;

pub type ParameterSpace64 = domain::ParameterSpace<f64>;
pub type ParameterSpace32 = domain::ParameterSpace<f32>;
pub type SampleSet64 = domain::SampleSet<f64>;
pub type SampleSet32 = domain::SampleSet<f32>;
pub type SpectralEstimate64 = gradients::SpectralEstimate<f64>;
pub type SpectralEstimate32 = gradients::SpectralEstimate<f32>;
pub type Frame64 = subspace::Frame<f64>;
pub type Frame32 = subspace::Frame<f32>;
pub type RidgeModel64 = subspace::RidgeModel<f64>;
pub type RidgeModel32 = subspace::RidgeModel<f32>;
pub type QuadraticSurrogate64 = subspace::QuadraticSurrogate<f64>;
pub type QuadraticSurrogate32 = subspace::QuadraticSurrogate<f32>;
pub type GeodesicPath64 = grassmann::GeodesicPath<f64>;
pub type GeodesicPath32 = grassmann::GeodesicPath<f32>;
pub type MixResult64 = grassmann::MixResult<f64>;
pub type MixResult32 = grassmann::MixResult<f32>;
pub type ParetoTrace64 = pareto::ParetoTrace<f64>;
pub type ParetoTrace32 = pareto::ParetoTrace<f32>;
pub type Zonotope2D64 = pareto::Zonotope2D<f64>;
pub type Zonotope2D32 = pareto::Zonotope2D<f32>;
