//! Arbitrage-free pricing read as a family of statistical experiments.
//!
//! Discounted price processes are filtered likelihood ratios. This crate
//! builds the pieces and checks them against closed forms:
//!
//! * [`tangent`], [`hazard`]: centered tangents of the uniform law, their
//!   hazard-rate derivatives and the projection onto the observation filtration.
//! * [`pricing`]: call prices, deltas and gammas as levels and powers of
//!   Neyman-Pearson tests, Monte Carlo engines and a binomial comparison.
//! * [`asymptotics`]: product likelihood experiments, their filtered price
//!   paths and the normal, Wiener and mixed-normal limits.
//! * [`gaussian`]: Brownian and fractional Brownian limit experiments.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod estimate;
pub mod gaussian;
pub mod grid;
pub mod hazard;
pub mod path;
pub mod pricing;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod tangent;

pub use error::{Error, Result};
pub use estimate::MonteCarloEstimate;
pub use grid::TimeGrid;
pub use hazard::{HazardDerivative, HazardPair};
pub use path::LikelihoodPath;
pub use rng::{Executor, RngStreamSpec};
pub use tangent::TangentFunction;
