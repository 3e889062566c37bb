//! Random-scale variant: every projection is multiplied by a scale `Y`
//! drawn independently of the observations.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::LikelihoodPath;
use crate::rng::{open_uniform, Executor, RngStreamSpec, StreamRng};
use crate::stats::gaussian_cdf;

use super::experiment::{draw_uniforms, ProductExperimentSpec};

/// Child stream reserved for the scale draws.
const SCALE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScaleLaw {
    Constant(f64),
    /// Finite support with the given probabilities.
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    Uniform {
        low: f64,
        high: f64,
    },
}

impl ScaleLaw {
    pub fn equiprobable(values: Vec<f64>) -> Self {
        let p = 1.0 / values.len() as f64;
        let probs = vec![p; values.len()];
        ScaleLaw::Discrete { values, probs }
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidParameter {
            name: "scale",
            reason,
        };
        match self {
            ScaleLaw::Constant(y) if !y.is_finite() => Err(bad(format!("non-finite scale {y}"))),
            ScaleLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(bad(
                        "values and probabilities must be nonempty and match".into()
                    ));
                }
                if probs.iter().any(|&p| !(p >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
                    return Err(bad(
                        "probabilities must be nonnegative, values finite".into()
                    ));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(bad(format!("probabilities sum to {total}")));
                }
                Ok(())
            }
            ScaleLaw::Uniform { low, high }
                if !(low.is_finite() && high.is_finite() && low < high) =>
            {
                Err(bad(format!("need low < high, got [{low}, {high}]")))
            }
            _ => Ok(()),
        }
    }

    /// `sup |Y|` over the support.
    pub fn sup_abs(&self) -> f64 {
        match self {
            ScaleLaw::Constant(y) => y.abs(),
            ScaleLaw::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(v, _)| v.abs())
                .fold(0.0, f64::max),
            ScaleLaw::Uniform { low, high } => low.abs().max(high.abs()),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            ScaleLaw::Constant(y) => *y,
            ScaleLaw::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated nonempty")
            }
            ScaleLaw::Uniform { low, high } => low + (high - low) * open_uniform(rng),
        }
    }

    /// CDF of the limit law of `log X_{n,1}`, the mixture of
    /// `N(-y^2 s/2, y^2 s)` over the law of `Y`, with `s = sigma^2(1)`.
    pub fn mixture_cdf(&self, sigma2: f64, x: f64) -> f64 {
        let comp = |y: f64| gaussian_cdf(x, -0.5 * y * y * sigma2, y * y * sigma2);
        match self {
            ScaleLaw::Constant(y) => comp(*y),
            ScaleLaw::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(&v, &p)| p * comp(v)).sum()
            }
            ScaleLaw::Uniform { low, high } => {
                // midpoint rule; the integrand is smooth in y
                let m = 400;
                let h = (high - low) / m as f64;
                (0..m)
                    .map(|k| comp(low + (k as f64 + 0.5) * h))
                    .sum::<f64>()
                    / m as f64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomScaleSpec {
    pub law: ScaleLaw,
}

impl RandomScaleSpec {
    pub fn new(law: ScaleLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self { law })
    }

    /// `sup |Y| <= sqrt(n)/bound`.
    pub fn check_support(&self, n: usize, bound: f64) -> Result<()> {
        let limit = (n as f64).sqrt() / bound;
        let sup = self.law.sup_abs();
        if bound > 0.0 && sup > limit {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: format!("support reaches |Y| = {sup}, above sqrt(n)/bound = {limit}"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LamnPath {
    pub scale: f64,
    pub path: LikelihoodPath,
}

/// Uniforms come from `rng.rng()`, exactly as for the plain filtered path,
/// and `Y` from a separate child stream.
pub fn lamn_path(
    spec: &ProductExperimentSpec,
    i: usize,
    scale: &RandomScaleSpec,
    rng: RngStreamSpec,
) -> Result<LamnPath> {
    let proj = spec.projector(i)?;
    scale.check_support(spec.n(), spec.pairs()[i].g.bound())?;
    let x = draw_uniforms(spec.n(), &mut rng.rng());
    let y = scale.law.sample(&mut rng.child(SCALE_STREAM).rng());
    let f = proj.evaluate(&x, y)?;
    Ok(LamnPath {
        scale: y,
        path: f.likelihood_path(),
    })
}

/// `(Y, log X_{n,1})` for `reps` replications. Uniforms use `rng.child(0)`,
/// scales `rng.child(1)`.
pub fn lamn_terminal_sample(
    spec: &ProductExperimentSpec,
    i: usize,
    scale: &RandomScaleSpec,
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<Vec<(f64, f64)>> {
    let proj = spec.projector(i)?;
    scale.check_support(spec.n(), spec.pairs()[i].g.bound())?;
    let n = spec.n();
    let ys = exec.collect(rng.child(SCALE_STREAM), reps, |r| scale.law.sample(r));
    let logs = exec.run_indexed_blocks(rng.child(0), reps, |r, start, len| {
        (start..start + len)
            .map(|k| {
                let x = draw_uniforms(n, r);
                proj.log_likelihood_at(&x, 1.0, ys[k])
            })
            .collect::<Result<Vec<f64>>>()
    });
    let mut out = Vec::with_capacity(reps);
    let mut k = 0;
    for block in logs {
        for l in block? {
            out.push((ys[k], l));
            k += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_distance;
    use crate::tangent::linear;

    use super::super::experiment::filtered_likelihood_path;

    #[test]
    fn zero_scale_gives_unit_path() {
        let spec = ProductExperimentSpec::single(linear(), 100).unwrap();
        let s = RandomScaleSpec::new(ScaleLaw::Constant(0.0)).unwrap();
        let p = lamn_path(&spec, 0, &s, RngStreamSpec::new(1, 0)).unwrap();
        assert!(p.path.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn unit_scale_reduces_to_filtered_path() {
        let spec = ProductExperimentSpec::single(linear(), 100).unwrap();
        let s = RandomScaleSpec::new(ScaleLaw::Constant(1.0)).unwrap();
        let rng = RngStreamSpec::new(9, 2);
        let p = lamn_path(&spec, 0, &s, rng).unwrap();
        let q = filtered_likelihood_path(&spec, 0, rng).unwrap();
        assert_eq!(p.path, q);
    }

    #[test]
    fn support_bound_enforced() {
        let spec = ProductExperimentSpec::single(linear(), 100).unwrap();
        let s = RandomScaleSpec::new(ScaleLaw::Constant(10.5)).unwrap();
        assert!(lamn_path(&spec, 0, &s, RngStreamSpec::new(1, 0)).is_err());
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(RandomScaleSpec::new(ScaleLaw::Discrete {
            values: vec![1.0],
            probs: vec![0.5]
        })
        .is_err());
        assert!(RandomScaleSpec::new(ScaleLaw::Uniform {
            low: 1.0,
            high: 1.0
        })
        .is_err());
    }

    #[test]
    fn discrete_sampler_frequencies() {
        let law = ScaleLaw::equiprobable(vec![0.5, 1.5]);
        let mut r = RngStreamSpec::new(4, 0).rng();
        let hits = (0..20_000).filter(|_| law.sample(&mut r) == 0.5).count();
        assert!((hits as f64 / 20_000.0 - 0.5).abs() < 0.015);
    }

    #[test]
    fn mixture_limit() {
        let spec = ProductExperimentSpec::single(linear(), 2500).unwrap();
        let s = RandomScaleSpec::new(ScaleLaw::equiprobable(vec![0.5, 1.5])).unwrap();
        let out = lamn_terminal_sample(
            &spec,
            0,
            &s,
            2000,
            RngStreamSpec::new(12, 0),
            &Executor::new(4),
        )
        .unwrap();
        let l: Vec<f64> = out.iter().map(|p| p.1).collect();
        let d = ks_distance(&l, |x| s.law.mixture_cdf(1.0 / 3.0, x));
        assert!(d < 0.05, "KS {d}");
    }
}
