//! Marginal checks of the joint log-likelihood vector along fixed directions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{Executor, RngStreamSpec};
use crate::stats::ks_distance_gaussian;

use super::experiment::{draw_uniforms, static_log_likelihood, ProductExperimentSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionReport {
    pub direction: Vec<f64>,
    /// `a' Sigma a`
    pub variance: f64,
    pub ks: f64,
}

/// For each direction `a`, KS distance of `a . (l + diag(Sigma)/2)` against
/// `N(0, a' Sigma a)`, where `l` is the vector of static log-likelihoods on
/// a common draw set.
pub fn joint_loglik_marginals(
    spec: &ProductExperimentSpec,
    directions: &[Vec<f64>],
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<Vec<DirectionReport>> {
    let d = spec.dim();
    if d < 2 {
        return Err(Error::InvalidParameter {
            name: "pairs",
            reason: format!("joint marginals need d >= 2, got {d}"),
        });
    }
    if spec.rank_deficient() {
        return Err(Error::InvalidParameter {
            name: "pairs",
            reason: "tangent covariance is rank deficient".into(),
        });
    }
    if let Some(a) = directions.iter().find(|a| a.len() != d) {
        return Err(Error::InvalidParameter {
            name: "direction",
            reason: format!("expected {d} components, got {}", a.len()),
        });
    }
    let sigma = &spec.covariance().matrix;
    let n = spec.n();
    let logs = exec.try_collect(rng, reps, |r| {
        let x = draw_uniforms(n, r);
        spec.pairs()
            .iter()
            .enumerate()
            .map(|(k, p)| Ok(static_log_likelihood(&p.g, &x)? + 0.5 * sigma[(k, k)]))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(directions
        .iter()
        .map(|a| {
            let proj: Vec<f64> = logs
                .iter()
                .map(|l| a.iter().zip(l).map(|(ai, li)| ai * li).sum())
                .collect();
            let mut variance = 0.0;
            for i in 0..d {
                for j in 0..d {
                    variance += a[i] * sigma[(i, j)] * a[j];
                }
            }
            DirectionReport {
                direction: a.clone(),
                variance,
                ks: ks_distance_gaussian(&proj, 0.0, variance),
            }
        })
        .collect())
}
