use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point estimate with its standard error, replication count and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    pub seed: u64,
}

impl MonteCarloEstimate {
    /// `stderr` is the unbiased sample standard deviation over `sqrt(reps)`.
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let stats = RunningStats::from_slice(samples);
        stats.estimate(seed)
    }

    /// Is `target` within `k` standard errors of the mean?
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Streaming mean/variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut s = Self::new();
        for &x in xs {
            s.push(x);
        }
        s
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self, seed: u64) -> Result<MonteCarloEstimate> {
        if self.count == 0 {
            return Err(Error::EmptySample);
        }
        Ok(MonteCarloEstimate {
            mean: self.mean,
            stderr: (self.variance() / self.count as f64).sqrt(),
            reps: self.count,
            seed,
        })
    }
}
