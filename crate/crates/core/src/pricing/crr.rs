//! Cox-Ross-Rubinstein tree: backward-induction price and replicating delta,
//! compared node by node with the power of the Neyman-Pearson test on the
//! discrete likelihood ratio.
//!
//! Ties `LR = c` (exact atoms of the discrete law) count as rejections,
//! matching the strict test `1{LR > c}`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance under which a leaf is treated as sitting exactly at the strike.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrrModel {
    pub steps: usize,
    pub up: f64,
    pub down: f64,
    /// Per-step money-market growth factor, `exp(rho * dt)`.
    pub growth: f64,
    pub s0: f64,
    pub strike: f64,
}

impl CrrModel {
    pub fn new(steps: usize, up: f64, down: f64, s0: f64, strike: f64) -> Result<Self> {
        Self {
            steps,
            up,
            down,
            growth: 1.0,
            s0,
            strike,
        }
        .validated()
    }

    pub fn with_growth(
        steps: usize,
        up: f64,
        down: f64,
        growth: f64,
        s0: f64,
        strike: f64,
    ) -> Result<Self> {
        Self {
            steps,
            up,
            down,
            growth,
            s0,
            strike,
        }
        .validated()
    }

    /// `u = exp(sigma sqrt(T/N))`, `d = 1/u`, growth `exp(rate T/N)`.
    pub fn calibrated(
        steps: usize,
        sigma: f64,
        horizon: f64,
        rate: f64,
        s0: f64,
        strike: f64,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                reason: "calibration needs at least one step".into(),
            });
        }
        let dt = horizon / steps as f64;
        let up = (sigma * dt.sqrt()).exp();
        Self {
            steps,
            up,
            down: 1.0 / up,
            growth: (rate * dt).exp(),
            s0,
            strike,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.s0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "s0",
                reason: format!("must be positive, got {}", self.s0),
            });
        }
        if !(self.strike >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "strike",
                reason: format!("must be nonnegative, got {}", self.strike),
            });
        }
        if !(self.down > 0.0 && self.down < self.growth && self.growth < self.up) {
            return Err(Error::Arbitrage {
                down: self.down,
                growth: self.growth,
                up: self.up,
            });
        }
        Ok(self)
    }

    /// Risk-neutral up probability `q = (R - d)/(u - d)`.
    pub fn q(&self) -> f64 {
        (self.growth - self.down) / (self.up - self.down)
    }

    /// Up probability under the measure with the stock as numeraire.
    pub fn q_alt(&self) -> f64 {
        self.q() * self.up / self.growth
    }

    pub fn spot(&self, step: usize, ups: usize) -> f64 {
        self.s0 * self.up.powi(ups as i32) * self.down.powi((step - ups) as i32)
    }

    fn in_the_money(&self, step: usize, ups: usize) -> bool {
        let s = self.spot(step, ups);
        s > self.strike && (s - self.strike).abs() > TIE_TOL * self.strike.max(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrrNode {
    pub step: usize,
    pub ups: usize,
    pub spot: f64,
    pub value: f64,
    /// `(V_up - V_down)/(S_up - S_down)`; `None` at the leaves.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrrTree {
    pub price: f64,
    /// `nodes[step][ups]`
    pub nodes: Vec<Vec<CrrNode>>,
}

impl CrrTree {
    pub fn root_delta(&self) -> Option<f64> {
        self.nodes.first().and_then(|n| n[0].delta)
    }
}

/// Backward induction for the European call.
pub fn crr_price_and_delta(model: &CrrModel) -> CrrTree {
    let n = model.steps;
    let q = model.q();
    let disc = 1.0 / model.growth;
    let mut nodes: Vec<Vec<CrrNode>> = Vec::with_capacity(n + 1);
    let leaves: Vec<CrrNode> = (0..=n)
        .map(|j| {
            let spot = model.spot(n, j);
            CrrNode {
                step: n,
                ups: j,
                spot,
                value: if model.in_the_money(n, j) {
                    spot - model.strike
                } else {
                    0.0
                },
                delta: None,
            }
        })
        .collect();
    nodes.push(leaves);
    for step in (0..n).rev() {
        let next = nodes.last().expect("populated");
        let level: Vec<CrrNode> = (0..=step)
            .map(|j| {
                let up = &next[j + 1];
                let down = &next[j];
                CrrNode {
                    step,
                    ups: j,
                    spot: model.spot(step, j),
                    value: disc * (q * up.value + (1.0 - q) * down.value),
                    delta: Some((up.value - down.value) / (up.spot - down.spot)),
                }
            })
            .collect();
        nodes.push(level);
    }
    nodes.reverse();
    CrrTree {
        price: nodes[0][0].value,
        nodes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapNode {
    pub step: usize,
    pub ups: usize,
    pub spot: f64,
    /// `Q(LR > c)` from this node.
    pub level: f64,
    /// `Q_1(LR > c)` from this node.
    pub power: f64,
    pub delta: f64,
    /// `power - delta`
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrrPowerGap {
    pub nodes: Vec<GapNode>,
}

impl CrrPowerGap {
    pub fn max_abs_gap(&self) -> f64 {
        self.nodes.iter().map(|n| n.gap.abs()).fold(0.0, f64::max)
    }
}

/// Exact binomial sums of the test outcome over the remaining leaves.
fn leaf_probability(model: &CrrModel, step: usize, ups: usize, p: f64) -> f64 {
    let remaining = model.steps - step;
    let mut total = 0.0;
    // binomial coefficient built multiplicatively
    let mut coeff = 1.0;
    for k in 0..=remaining {
        if k > 0 {
            coeff = coeff * (remaining - k + 1) as f64 / k as f64;
        }
        if model.in_the_money(model.steps, ups + k) {
            total += coeff * p.powi(k as i32) * (1.0 - p).powi((remaining - k) as i32);
        }
    }
    total
}

/// Per interior node: Neyman-Pearson power `Q'_1(LR > c)` of the updated
/// test against the replicating delta. A tree with no steps has no interior
/// nodes and gives an empty report.
pub fn crr_np_power_gap(model: &CrrModel) -> CrrPowerGap {
    let tree = crr_price_and_delta(model);
    let q = model.q();
    let q1 = model.q_alt();
    let nodes = tree
        .nodes
        .iter()
        .take(model.steps)
        .flatten()
        .map(|node| {
            let delta = node.delta.expect("interior node");
            let power = leaf_probability(model, node.step, node.ups, q1);
            GapNode {
                step: node.step,
                ups: node.ups,
                spot: node.spot,
                level: leaf_probability(model, node.step, node.ups, q),
                power,
                delta,
                gap: power - delta,
            }
        })
        .collect();
    CrrPowerGap { nodes }
}
