use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing time points starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

pub const DEFAULT_GRID_POINTS: usize = 33;

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.first() != Some(&0.0) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "first grid point must be 0".into(),
            });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "grid points must be finite".into(),
            });
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "grid points must be strictly increasing".into(),
            });
        }
        Ok(Self { points })
    }

    /// `n_points` equispaced points on `[0, horizon]`, both ends included.
    pub fn uniform(n_points: usize, horizon: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need at least 2 points, got {n_points}"),
            });
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("need horizon > 0, got {horizon}"),
            });
        }
        let steps = (n_points - 1) as f64;
        let mut points: Vec<f64> = (0..n_points).map(|k| horizon * k as f64 / steps).collect();
        // pin the endpoint
        points[n_points - 1] = horizon;
        Self::new(points)
    }

    /// The 33-point grid on `[0, 1]`.
    pub fn unit_default() -> Self {
        Self::uniform(DEFAULT_GRID_POINTS, 1.0).expect("static grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("nonempty grid")
    }

    /// Index of `t` if it is a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.points.iter().position(|&p| p == t)
    }
}
