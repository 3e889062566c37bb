use std::fmt;

use thiserror::Error;

/// Constraint of the tangent space that a candidate function can break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentConstraint {
    MeanZero,
    Bound,
    Finite,
}

impl fmt::Display for TangentConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TangentConstraint::MeanZero => f.write_str("mean-zero"),
            TangentConstraint::Bound => f.write_str("bound"),
            TangentConstraint::Finite => f.write_str("finiteness"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "quadrature did not converge on [{a}, {b}]: best estimate {estimate}, error estimate {error_estimate:e}"
    )]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        estimate: f64,
        error_estimate: f64,
    },

    #[error("tangent `{label}` violates the {constraint} constraint: {detail}")]
    InvalidTangent {
        label: String,
        constraint: TangentConstraint,
        detail: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singularity: {0}")]
    Singularity(String),

    #[error(
        "nonpositive likelihood factor {factor} at n={n} (tangent bound {bound}); positivity requires n > bound^2"
    )]
    NonPositiveFactor { factor: f64, n: usize, bound: f64 },

    #[error("sample size n={n} is below the safety threshold 4*bound^2 = {required}")]
    SampleTooSmall { n: usize, required: f64 },

    #[error("negative likelihood-ratio draw {0}: sampler violates the model")]
    NegativeLikelihood(f64),

    #[error("empty sampler: at least one replication is required")]
    EmptySample,

    #[error("arbitrage: need down < growth < up, got d={down}, growth={growth}, u={up}")]
    Arbitrage { down: f64, growth: f64, up: f64 },

    #[error("grid minimum attained at the upper boundary k={k} (value {value}); widen the grid")]
    BoundaryMinimum { k: f64, value: f64 },

    #[error(
        "finite-difference bump too large: one-sided differences {forward} and {backward} disagree by more than 10%"
    )]
    BumpTooLarge { forward: f64, backward: f64 },

    #[error("covariance factorization failed on a {size}-point grid; use a coarser grid")]
    Factorization { size: usize },

    #[error("rejection sampler exceeded {0} iterations")]
    RejectionCap(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
