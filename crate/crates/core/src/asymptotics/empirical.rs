//! Normalized empirical process of a sample from the alternative
//! `1 + g/sqrt(n)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rng::{open_uniform, Executor, RngStreamSpec, StreamRng};
use crate::tangent::TangentFunction;

const NEWTON_TOL: f64 = 1e-14;
const MAX_NEWTON: usize = 60;
const REJECTION_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlternativeSampler {
    /// Inverse CDF through the closed-form antiderivative.
    Inversion,
    /// Uniform envelope `1 + bound/sqrt(n)`.
    Rejection,
}

/// Sampler for the density `1 + g(x)/sqrt(n)` on (0, 1).
#[derive(Debug, Clone)]
pub struct AlternativeLaw {
    g: TangentFunction,
    sqrt_n: f64,
    pub method: AlternativeSampler,
}

impl AlternativeLaw {
    pub fn new(g: &TangentFunction, n: usize) -> Result<Self> {
        let sqrt_n = (n as f64).sqrt();
        if n == 0 || g.bound() >= sqrt_n {
            return Err(Error::NonPositiveFactor {
                factor: 1.0 - g.bound() / sqrt_n,
                n,
                bound: g.bound(),
            });
        }
        let method = if g.closed_form().is_some() {
            AlternativeSampler::Inversion
        } else {
            AlternativeSampler::Rejection
        };
        Ok(Self {
            g: g.clone(),
            sqrt_n,
            method,
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(x + self.g.antiderivative(x)? / self.sqrt_n)
    }

    fn invert(&self, u: f64) -> f64 {
        let anti = &self
            .g
            .closed_form()
            .expect("inversion needs a closed form")
            .antiderivative;
        let f = |x: f64| x + anti(x) / self.sqrt_n - u;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x = u;
        for _ in 0..MAX_NEWTON {
            let fx = f(x);
            if fx.abs() < NEWTON_TOL {
                break;
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = x - fx / (1.0 + self.g.eval(x) / self.sqrt_n);
            // fall back to bisection when Newton leaves the bracket
            x = if step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
        }
        x
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<f64> {
        match self.method {
            AlternativeSampler::Inversion => Ok(self.invert(open_uniform(rng))),
            AlternativeSampler::Rejection => {
                let envelope = 1.0 + self.g.bound() / self.sqrt_n;
                for _ in 0..REJECTION_CAP {
                    let x = open_uniform(rng);
                    let density = 1.0 + self.g.eval(x) / self.sqrt_n;
                    if density < 0.0 {
                        return Err(Error::NonPositiveFactor {
                            factor: density,
                            n: (self.sqrt_n * self.sqrt_n).round() as usize,
                            bound: self.g.bound(),
                        });
                    }
                    if open_uniform(rng) * envelope <= density {
                        return Ok(x);
                    }
                }
                Err(Error::RejectionCap(REJECTION_CAP))
            }
        }
    }
}

/// `sqrt(n) (F_n(t) - t)` on the grid for `x` drawn from `1 + g/sqrt(n)`.
pub fn empirical_process_from_draws(x: &[f64], grid: &TimeGrid) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let sqrt_n = n.sqrt();
    grid.points()
        .iter()
        .map(|&t| {
            if t >= 1.0 {
                // all draws lie in (0, 1)
                return 0.0;
            }
            let count = v.partition_point(|&xi| xi <= t) as f64;
            sqrt_n * (count / n - t)
        })
        .collect()
}

/// One path of the normalized empirical process under the alternative.
pub fn empirical_process_shifted(
    g: &TangentFunction,
    n: usize,
    grid: &TimeGrid,
    rng: RngStreamSpec,
) -> Result<Vec<f64>> {
    let law = AlternativeLaw::new(g, n)?;
    let mut r = rng.rng();
    let x = (0..n)
        .map(|_| law.sample(&mut r))
        .collect::<Result<Vec<_>>>()?;
    Ok(empirical_process_from_draws(&x, grid))
}

/// `reps` independent paths, in replication order.
pub fn empirical_process_paths(
    g: &TangentFunction,
    n: usize,
    grid: &TimeGrid,
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<Vec<Vec<f64>>> {
    let law = AlternativeLaw::new(g, n)?;
    exec.try_collect(rng, reps, |r| {
        let x = (0..n).map(|_| law.sample(r)).collect::<Result<Vec<_>>>()?;
        Ok(empirical_process_from_draws(&x, grid))
    })
}
