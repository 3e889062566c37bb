//! Fractional Brownian motion by Cholesky factorization of its covariance.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::path::LikelihoodPath;
use crate::rng::StreamRng;

pub const MAX_FBM_POINTS: usize = 256;
pub const JITTER: f64 = 1e-12;

/// `R(s, t) = (|t|^{2H} + |s|^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64) -> f64 {
    if hurst == 0.5 {
        // Brownian case without rounding: min(|s|, |t|) on a common side of 0
        return if s.signum() == t.signum() {
            s.signum() * s.abs().min(t.abs())
        } else {
            0.0
        };
    }
    let h2 = 2.0 * hurst;
    0.5 * (t.abs().powf(h2) + s.abs().powf(h2) - (t - s).abs().powf(h2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbmSpec {
    pub hurst: f64,
    /// Starts at 0, where the process vanishes.
    pub grid: TimeGrid,
}

impl FbmSpec {
    pub fn new(hurst: f64, grid: TimeGrid) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter {
                name: "hurst",
                reason: format!("must lie in (0, 1), got {hurst}"),
            });
        }
        if grid.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "need at least one positive grid point".into(),
            });
        }
        if grid.len() - 1 > MAX_FBM_POINTS {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!(
                    "at most {MAX_FBM_POINTS} positive grid points, got {}",
                    grid.len() - 1
                ),
            });
        }
        Ok(Self { hurst, grid })
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let t = &self.grid.points()[1..];
        DMatrix::from_fn(t.len(), t.len(), |i, j| {
            fbm_covariance(t[i], t[j], self.hurst)
        })
    }
}

/// Holds the lower-triangular factor; shared read-only across paths.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    spec: FbmSpec,
    factor: DMatrix<f64>,
    pub jittered: bool,
}

impl FbmSampler {
    pub fn new(spec: FbmSpec) -> Result<Self> {
        let cov = spec.covariance_matrix();
        let size = cov.nrows();
        if let Some(c) = cov.clone().cholesky() {
            return Ok(Self {
                spec,
                factor: c.l(),
                jittered: false,
            });
        }
        let jittered = cov + DMatrix::identity(size, size) * JITTER;
        match jittered.cholesky() {
            Some(c) => Ok(Self {
                spec,
                factor: c.l(),
                jittered: true,
            }),
            None => Err(Error::Factorization { size }),
        }
    }

    pub fn spec(&self) -> &FbmSpec {
        &self.spec
    }

    /// Values on the grid, starting with the exact 0 at time 0.
    pub fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        let m = self.factor.nrows();
        let z = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
        let x = &self.factor * z;
        std::iter::once(0.0).chain(x.iter().copied()).collect()
    }

    /// `t -> exp(B_H(t) - t^{2H}/2)`.
    pub fn loglik_path(&self, rng: &mut StreamRng) -> LikelihoodPath {
        let b = self.sample(rng);
        let h2 = 2.0 * self.spec.hurst;
        let logs = self
            .spec
            .grid
            .points()
            .iter()
            .zip(b)
            .map(|(&t, bt)| bt - 0.5 * t.powf(h2))
            .collect();
        LikelihoodPath::from_log(self.spec.grid.clone(), logs)
    }
}

pub fn fbm_sample(spec: &FbmSpec, rng: &mut StreamRng) -> Result<Vec<f64>> {
    Ok(FbmSampler::new(spec.clone())?.sample(rng))
}

pub fn fbm_loglik_path(spec: &FbmSpec, rng: &mut StreamRng) -> Result<LikelihoodPath> {
    Ok(FbmSampler::new(spec.clone())?.loglik_path(rng))
}
