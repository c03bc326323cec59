//! The GEM rational activation family and its tooling.
//!
//! - [`gem`], [`egem`], [`segem`]: scalar forwards, gates, derivatives and
//!   the closed-form extremum results.
//! - [`baseline`]: ReLU / SiLU / GELU comparison activations.
//! - [`distance`]: the closed-form ℓ^p distance to ReLU.
//! - [`kernels`]: buffer kernels with gate caching, op-count audit, and a
//!   throughput micro-benchmark.
//! - [`verify`]: finite differences, adaptive quadrature, golden-section
//!   search and the named check suites.
//! - [`nn`]: a small dense-network trainer with the gradient-flow probes.
//! - [`rng`]: the fixed splitmix64/xoshiro256** stream.

pub mod baseline;
pub mod distance;
pub mod egem;
pub mod gem;
pub mod kernels;
pub mod nn;
pub mod real;
pub mod rng;
pub mod segem;
pub mod types;
pub mod verify;

pub use real::Real;
pub use types::{ActivationSpec, Epsilon, LipschitzResult, Precision, SmoothnessOrder, SpecError};
