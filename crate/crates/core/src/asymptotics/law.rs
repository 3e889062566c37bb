//! Diagnostics for the local asymptotic Wiener conditions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{Executor, RngStreamSpec};
use crate::stats::{ks_distance_gaussian, median};

use super::experiment::{simulate_filtered, FilteredPaths, ProductExperimentSpec};

/// Minimum number of grid points for a meaningful sup over time.
pub const MIN_LAW_GRID: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Median over replications of `sup_t |log X_{n,t} - (Z_n(t) - sigma^2(t)/2)|`.
    pub sup_remainder: f64,
    /// KS distance of `Z_n(t)` against `N(0, sigma^2(t))`, one per grid time.
    pub ks_distances: Vec<f64>,
    /// Median over replications of `sup_t |sigma_n^2(t) - sigma^2(t)|`.
    pub sup_sigma_err: f64,
    pub times: Vec<f64>,
}

impl LawReport {
    pub fn ks_at_horizon(&self) -> f64 {
        *self.ks_distances.last().unwrap_or(&0.0)
    }

    pub fn max_ks(&self) -> f64 {
        self.ks_distances.iter().copied().fold(0.0, f64::max)
    }
}

fn sup_dev(p: &FilteredPaths) -> (f64, f64) {
    let mut rem: f64 = 0.0;
    let mut sig: f64 = 0.0;
    for (k, s2n) in p.sigma_n2().into_iter().enumerate() {
        let s2 = p.sigma2[k];
        rem = rem.max((p.log_x[k] - (p.z[k] - 0.5 * s2)).abs());
        sig = sig.max((s2n - s2).abs());
    }
    (rem, sig)
}

/// Summaries from already simulated paths.
pub fn law_summary(paths: &[FilteredPaths], n: usize, seed: u64) -> Result<LawReport> {
    let first = paths.first().ok_or(Error::EmptySample)?;
    let times = first.times.points().to_vec();
    let (rems, sigs): (Vec<f64>, Vec<f64>) = paths.iter().map(sup_dev).unzip();
    let ks_distances = (0..times.len())
        .map(|k| {
            let z: Vec<f64> = paths.iter().map(|p| p.z[k]).collect();
            ks_distance_gaussian(&z, 0.0, first.sigma2[k])
        })
        .collect();
    Ok(LawReport {
        n,
        reps: paths.len(),
        seed,
        sup_remainder: median(&rems),
        ks_distances,
        sup_sigma_err: median(&sigs),
        times,
    })
}

/// One report per sample size. Sample size `n_list[k]` uses stream
/// `rng.child(k)`.
pub fn law_report(
    spec: &ProductExperimentSpec,
    i: usize,
    reps: usize,
    n_list: &[usize],
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<Vec<LawReport>> {
    if spec.grid().len() < MIN_LAW_GRID {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!(
                "need at least {MIN_LAW_GRID} grid points, got {}",
                spec.grid().len()
            ),
        });
    }
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let s = spec.with_n(n)?;
            let paths = simulate_filtered(&s, i, reps, rng.child(k as u64), exec)?;
            law_summary(&paths, n, rng.master_seed)
        })
        .collect()
}
