//! Location experiments with density `C(H) exp(-|x|^{2H})`.

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::rng::{open_uniform, Executor, RngStreamSpec, StreamRng};

pub const REJECTION_CAP: usize = 1000;

/// `C(H) = 1 / (2 Gamma(1 + 1/(2H)))`.
pub fn prakasa_rao_constant(hurst: f64) -> f64 {
    0.5 / gamma(1.0 + 0.5 / hurst)
}

pub fn prakasa_rao_density(hurst: f64, x: f64) -> f64 {
    prakasa_rao_constant(hurst) * (-x.abs().powf(2.0 * hurst)).exp()
}

/// `2 C(H) int_0^inf exp(-x^{2H}) dx` by quadrature, truncated where the
/// integrand falls below `e^{-60}`.
pub fn normalization_check(hurst: f64, tol: f64) -> Result<f64> {
    let upper = 60f64.powf(0.5 / hurst);
    let h2 = 2.0 * hurst;
    // split at 1 so the cusp at 0 and the tail get separate refinement
    let inner = integrate(|x: f64| (-x.powf(h2)).exp(), 0.0, 1.0, tol)?;
    let outer = integrate(|x: f64| (-x.powf(h2)).exp(), 1.0, upper, tol)?;
    Ok(2.0 * prakasa_rao_constant(hurst) * (inner + outer))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionExperimentSpec {
    pub hurst: f64,
    pub n: usize,
    pub t: f64,
    pub constant: f64,
}

impl RegressionExperimentSpec {
    pub fn new(hurst: f64, n: usize, t: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&hurst) {
            return Err(Error::InvalidParameter {
                name: "hurst",
                reason: format!("the sampler needs H in [1/2, 1), got {hurst}"),
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "need n >= 1".into(),
            });
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("must be finite, got {t}"),
            });
        }
        Ok(Self {
            hurst,
            n,
            t,
            constant: prakasa_rao_constant(hurst),
        })
    }

    /// Location shift `t n^{1/2 - H}`.
    pub fn shift(&self) -> f64 {
        self.t * (self.n as f64).powf(0.5 - self.hurst)
    }
}

/// Rejection from the Laplace density `exp(-|x|)/2`.
#[derive(Debug, Clone, Copy)]
pub struct PrakasaRaoSampler {
    hurst: f64,
    log_bound: f64,
}

impl PrakasaRaoSampler {
    pub fn new(hurst: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&hurst) {
            return Err(Error::InvalidParameter {
                name: "hurst",
                reason: format!("Laplace envelope needs H in [1/2, 1), got {hurst}"),
            });
        }
        // sup_x (x - x^{2H}) is attained at x = (2H)^{-1/(2H-1)}
        let log_bound = if hurst == 0.5 {
            0.0
        } else {
            let x = (2.0 * hurst).powf(-1.0 / (2.0 * hurst - 1.0));
            x - x.powf(2.0 * hurst)
        };
        Ok(Self { hurst, log_bound })
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<f64> {
        for _ in 0..REJECTION_CAP {
            let u = open_uniform(rng);
            let r = -open_uniform(rng).ln();
            let x = if u < 0.5 { -r } else { r };
            let log_ratio = r - r.powf(2.0 * self.hurst) - self.log_bound;
            if open_uniform(rng).ln() <= log_ratio {
                return Ok(x);
            }
        }
        Err(Error::RejectionCap(REJECTION_CAP))
    }
}

/// `sum_i (|x_i|^{2H} - |x_i - t n^{1/2-H}|^{2H})`.
pub fn prakasa_rao_loglik_from_draws(spec: &RegressionExperimentSpec, x: &[f64]) -> f64 {
    let h2 = 2.0 * spec.hurst;
    let shift = spec.shift();
    x.iter()
        .map(|&xi| xi.abs().powf(h2) - (xi - shift).abs().powf(h2))
        .sum()
}

/// `log X_{n,t}` for `n` fresh null draws.
pub fn prakasa_rao_loglik(spec: &RegressionExperimentSpec, rng: &mut StreamRng) -> Result<f64> {
    let sampler = PrakasaRaoSampler::new(spec.hurst)?;
    let x = (0..spec.n)
        .map(|_| sampler.sample(rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(prakasa_rao_loglik_from_draws(spec, &x))
}

pub fn prakasa_rao_sample(
    spec: &RegressionExperimentSpec,
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<Vec<f64>> {
    exec.try_collect(rng, reps, |r| prakasa_rao_loglik(spec, r))
}
