use serde::Serialize;

use crate::grid::TimeGrid;

/// A likelihood (price) process sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodPath {
    pub times: TimeGrid,
    pub values: Vec<f64>,
    pub log_values: Vec<f64>,
}

impl LikelihoodPath {
    pub fn from_log(times: TimeGrid, log_values: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), log_values.len());
        let values = log_values.iter().map(|l| l.exp()).collect();
        Self {
            times,
            values,
            log_values,
        }
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }

    pub fn terminal_log(&self) -> f64 {
        *self.log_values.last().expect("nonempty path")
    }
}
