//! Brownian signal experiments: Ito exponentials, Girsanov densities and the
//! bridge decomposition.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hazard::{cumulative_variance, HazardDerivative};
use crate::path::LikelihoodPath;
use crate::rng::StreamRng;

/// Largest admissible cutoff for the bridge decomposition.
pub const BRIDGE_CUTOFF: f64 = 1.0 - 1.0 / 32.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl BrownianPath {
    /// Gaussian increments scaled by `sqrt(dt)`.
    pub fn sample(grid: &TimeGrid, rng: &mut StreamRng) -> Self {
        let t = grid.points();
        let mut values = Vec::with_capacity(t.len());
        values.push(0.0);
        for w in t.windows(2) {
            let z: f64 = StandardNormal.sample(rng);
            let last = *values.last().expect("nonempty");
            values.push(last + (w[1] - w[0]).sqrt() * z);
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zero(grid: &TimeGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    /// Value at a grid time.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|k| self.values[k])
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// `B_0(t) = B(t) - t B(1)` for a path on a grid ending at 1.
pub fn brownian_bridge(path: &BrownianPath) -> Result<BrownianPath> {
    let horizon = path.grid.horizon();
    if horizon != 1.0 {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("bridge needs a grid ending at 1, got {horizon}"),
        });
    }
    let b1 = path.terminal();
    let values = path
        .grid
        .points()
        .iter()
        .zip(&path.values)
        .map(|(&t, &b)| if t == 1.0 { 0.0 } else { b - t * b1 })
        .collect();
    Ok(BrownianPath {
        grid: path.grid.clone(),
        values,
    })
}

/// `X_t = exp(int_0^t gamma dB - int_0^t gamma^2 / 2)` with left-endpoint
/// sums for the stochastic integral.
pub fn ito_price_path(gamma: &HazardDerivative, path: &BrownianPath) -> Result<LikelihoodPath> {
    let t = path.grid.points();
    let mut stoch = 0.0;
    let mut logs = Vec::with_capacity(t.len());
    logs.push(0.0);
    for k in 1..t.len() {
        stoch += gamma.eval(t[k - 1])? * (path.values[k] - path.values[k - 1]);
        logs.push(stoch - 0.5 * cumulative_variance(gamma, t[k])?);
    }
    Ok(LikelihoodPath::from_log(path.grid.clone(), logs))
}

/// As [`ito_price_path`] with the compensator table precomputed.
#[derive(Debug, Clone)]
pub struct ItoIntegrator {
    gamma_left: Vec<f64>,
    half_var: Vec<f64>,
    grid: TimeGrid,
}

impl ItoIntegrator {
    pub fn new(gamma: &HazardDerivative, grid: &TimeGrid) -> Result<Self> {
        let t = grid.points();
        let gamma_left = t[..t.len() - 1]
            .iter()
            .map(|&s| gamma.eval(s))
            .collect::<Result<Vec<_>>>()?;
        let half_var = t
            .iter()
            .map(|&s| Ok(0.5 * cumulative_variance(gamma, s)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gamma_left,
            half_var,
            grid: grid.clone(),
        })
    }

    pub fn log_path(&self, path: &BrownianPath) -> Vec<f64> {
        let mut stoch = 0.0;
        let mut logs = Vec::with_capacity(self.half_var.len());
        logs.push(0.0);
        for k in 1..self.half_var.len() {
            stoch += self.gamma_left[k - 1] * (path.values[k] - path.values[k - 1]);
            logs.push(stoch - self.half_var[k]);
        }
        logs
    }

    /// Left-endpoint Ito integral over the whole grid.
    pub fn stochastic_integral(&self, path: &BrownianPath) -> f64 {
        path.values
            .windows(2)
            .zip(&self.gamma_left)
            .map(|(w, g)| g * (w[1] - w[0]))
            .sum()
    }

    pub fn terminal_log(&self, path: &BrownianPath) -> f64 {
        self.stochastic_integral(path) - self.half_var.last().copied().unwrap_or(0.0)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
}

/// `log dmu_gamma/dmu_0` evaluated on the path: the log of the Ito
/// exponential at the end of the grid.
pub fn girsanov_loglik(gamma: &HazardDerivative, path: &BrownianPath) -> Result<f64> {
    Ok(ito_price_path(gamma, path)?.terminal_log())
}

/// Recover `B(t) = B_0(t) + int_0^t B_0(s)/(1 - s) ds` on the grid points up
/// to `tau`, integrating by the trapezoid rule.
pub fn bridge_decomposition(bridge: &BrownianPath, tau: f64) -> Result<BrownianPath> {
    if !(tau > 0.0 && tau <= BRIDGE_CUTOFF) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("cutoff must lie in (0, {BRIDGE_CUTOFF}], got {tau}"),
        });
    }
    let t = bridge.grid.points();
    let last = t.partition_point(|&s| s <= tau);
    let integrand: Vec<f64> = t[..last]
        .iter()
        .zip(&bridge.values)
        .map(|(&s, &b)| b / (1.0 - s))
        .collect();
    let mut values = Vec::with_capacity(last);
    let mut acc = 0.0;
    values.push(bridge.values[0]);
    for k in 1..last {
        acc += 0.5 * (t[k] - t[k - 1]) * (integrand[k] + integrand[k - 1]);
        values.push(bridge.values[k] + acc);
    }
    Ok(BrownianPath {
        grid: TimeGrid::new(t[..last].to_vec())?,
        values,
    })
}
