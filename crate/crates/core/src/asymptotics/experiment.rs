//! Product experiments `dQ_{i,n}/dQ_{0,n}(x) = prod_j (1 + g_i(x_j)/sqrt(n))`
//! and their filtered likelihood processes.
//!
//! Given uniforms `x_1..x_n`, the projection of `g` on the observations up
//! to time `t` is `g(x_j)` for `x_j <= t` and the tail constant
//! `-int_0^t gamma/(1 - u)` otherwise. Every grid time therefore reuses the
//! per-draw values `g(x_j)` and one tail constant per time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{MonteCarloEstimate, RunningStats};
use crate::grid::TimeGrid;
use crate::hazard::{conditional_projection, cumulative_variance, HazardPair};
use crate::path::LikelihoodPath;
use crate::rng::{open_uniform, Executor, RngStreamSpec, StreamRng};
use crate::tangent::{covariance_matrix, validate_tangent, CovarianceReport, TangentFunction};

/// Safety factor on the positivity condition `n > bound^2`.
pub const SAFETY_FACTOR: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct ProductExperimentSpec {
    pairs: Vec<HazardPair>,
    n: usize,
    grid: TimeGrid,
    covariance: CovarianceReport,
}

impl ProductExperimentSpec {
    /// Requires `n >= 4 bound^2` for every tangent.
    pub fn new(pairs: Vec<HazardPair>, n: usize, grid: TimeGrid) -> Result<Self> {
        for p in &pairs {
            let required = SAFETY_FACTOR * p.g.bound() * p.g.bound();
            if (n as f64) < required {
                return Err(Error::SampleTooSmall { n, required });
            }
        }
        Self::with_small_sample(pairs, n, grid)
    }

    /// Skips the safety factor; every factor is still checked for positivity
    /// when a path is evaluated.
    pub fn with_small_sample(pairs: Vec<HazardPair>, n: usize, grid: TimeGrid) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "need n >= 1".into(),
            });
        }
        if pairs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "pairs",
                reason: "need at least one tangent".into(),
            });
        }
        if grid.horizon() > 1.0 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("grid must lie in [0, 1], ends at {}", grid.horizon()),
            });
        }
        for p in &pairs {
            validate_tangent(&p.g, 1e-8)?;
        }
        let gs: Vec<TangentFunction> = pairs.iter().map(|p| p.g.clone()).collect();
        let covariance = covariance_matrix(&gs, 1e-10)?;
        Ok(Self {
            pairs,
            n,
            grid,
            covariance,
        })
    }

    /// One tangent on the default 33-point grid.
    pub fn single(g: TangentFunction, n: usize) -> Result<Self> {
        Self::new(
            vec![HazardPair::from_tangent(g)],
            n,
            TimeGrid::unit_default(),
        )
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.pairs.clone(), n, self.grid.clone())
    }

    pub fn pairs(&self) -> &[HazardPair] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn covariance(&self) -> &CovarianceReport {
        &self.covariance
    }

    /// Warning flag: tangent covariance is not of full rank.
    pub fn rank_deficient(&self) -> bool {
        self.covariance.rank_deficient
    }

    fn pair(&self, i: usize) -> Result<&HazardPair> {
        self.pairs.get(i).ok_or(Error::InvalidParameter {
            name: "asset",
            reason: format!("asset {i} out of range (d = {})", self.pairs.len()),
        })
    }

    /// Projection tables for asset `i` on the grid.
    pub fn projector(&self, i: usize) -> Result<Projector> {
        let pair = self.pair(i)?.clone();
        let points = self.grid.points();
        let tails = points
            .iter()
            .map(|&t| tail_constant(&pair, t))
            .collect::<Result<Vec<_>>>()?;
        let sigma2 = points
            .iter()
            .map(|&t| cumulative_variance(&pair.gamma, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Projector {
            pair,
            n: self.n,
            sqrt_n: (self.n as f64).sqrt(),
            times: self.grid.clone(),
            tails,
            sigma2,
        })
    }
}

/// Value of the projection on `{x > t}`.
fn tail_constant(pair: &HazardPair, t: f64) -> Result<f64> {
    if t >= 1.0 {
        // no observation lies beyond the horizon
        return Ok(0.0);
    }
    conditional_projection(&pair.gamma, t, 1.0f64.min(t + 0.5 * (1.0 - t)))
}

/// `n` uniforms on (0, 1).
pub fn draw_uniforms(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| open_uniform(rng)).collect()
}

/// Precomputed per-time quantities for one asset.
#[derive(Debug, Clone)]
pub struct Projector {
    pair: HazardPair,
    n: usize,
    sqrt_n: f64,
    times: TimeGrid,
    tails: Vec<f64>,
    sigma2: Vec<f64>,
}

/// All filtered quantities of one draw set on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredPaths {
    pub times: TimeGrid,
    /// `log X_{n,t}`
    pub log_x: Vec<f64>,
    /// `Z_n(t) = n^{-1/2} sum_j M_j(t)`
    pub z: Vec<f64>,
    /// `n^{-1} sum_j M_j(t)^2`
    pub quadratic_variation: Vec<f64>,
    /// `sigma^2(t) = int_0^t gamma^2`
    pub sigma2: Vec<f64>,
}

impl FilteredPaths {
    /// `sigma_n^2(t) = 2 (Z_n(t) - log X_{n,t})`.
    pub fn sigma_n2(&self) -> Vec<f64> {
        self.z
            .iter()
            .zip(&self.log_x)
            .map(|(z, l)| 2.0 * (z - l))
            .collect()
    }

    pub fn likelihood_path(&self) -> LikelihoodPath {
        LikelihoodPath::from_log(self.times.clone(), self.log_x.clone())
    }
}

impl Projector {
    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    fn check_factor(&self, factor: f64) -> Result<()> {
        if factor > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveFactor {
                factor,
                n: self.n,
                bound: self.pair.g.bound(),
            })
        }
    }

    /// Filtered quantities for draws `x`, with the projections multiplied by
    /// `scale` inside the likelihood factors (`scale = 1` for the plain
    /// experiment).
    pub fn evaluate(&self, x: &[f64], scale: f64) -> Result<FilteredPaths> {
        if x.len() != self.n {
            return Err(Error::InvalidParameter {
                name: "draws",
                reason: format!("expected {} draws, got {}", self.n, x.len()),
            });
        }
        let mut m = Vec::with_capacity(x.len());
        let mut a = Vec::with_capacity(x.len());
        for &xj in x {
            let mj = self.pair.g.eval(xj);
            let arg = scale * mj / self.sqrt_n;
            self.check_factor(1.0 + arg)?;
            m.push(mj);
            a.push(arg.ln_1p());
        }

        let k = self.times.len();
        let mut log_x = Vec::with_capacity(k);
        let mut z = Vec::with_capacity(k);
        let mut qv = Vec::with_capacity(k);
        for (ti, &t) in self.times.points().iter().enumerate() {
            let mut sl = 0.0;
            let mut sz = 0.0;
            let mut sq = 0.0;
            let mut beyond = 0usize;
            for j in 0..x.len() {
                if x[j] <= t {
                    sl += a[j];
                    sz += m[j];
                    sq += m[j] * m[j];
                } else {
                    beyond += 1;
                }
            }
            if beyond > 0 {
                let tail = self.tails[ti];
                let arg = scale * tail / self.sqrt_n;
                self.check_factor(1.0 + arg)?;
                let c = beyond as f64;
                sl += c * arg.ln_1p();
                sz += c * tail;
                sq += c * tail * tail;
            }
            log_x.push(sl);
            z.push(sz / self.sqrt_n);
            qv.push(sq / self.n as f64);
        }
        Ok(FilteredPaths {
            times: self.times.clone(),
            log_x,
            z,
            quadratic_variation: qv,
            sigma2: self.sigma2.clone(),
        })
    }

    /// `log X_{n,t}` at a single time, not necessarily on the grid.
    pub fn log_likelihood_at(&self, x: &[f64], t: f64, scale: f64) -> Result<f64> {
        let tail = tail_constant(&self.pair, t)?;
        let tail_arg = scale * tail / self.sqrt_n;
        let tail_log = tail_arg.ln_1p();
        let mut sl = 0.0;
        let mut beyond = 0usize;
        for &xj in x {
            if xj <= t {
                let arg = scale * self.pair.g.eval(xj) / self.sqrt_n;
                self.check_factor(1.0 + arg)?;
                sl += arg.ln_1p();
            } else {
                beyond += 1;
            }
        }
        if beyond > 0 {
            self.check_factor(1.0 + tail_arg)?;
            sl += beyond as f64 * tail_log;
        }
        Ok(sl)
    }
}

/// `log prod_j (1 + g(x_j)/sqrt(n))`, the unfiltered log-likelihood.
pub fn static_log_likelihood(g: &TangentFunction, x: &[f64]) -> Result<f64> {
    let sqrt_n = (x.len() as f64).sqrt();
    let mut sl = 0.0;
    for &xj in x {
        let arg = g.eval(xj) / sqrt_n;
        if !(1.0 + arg > 0.0) {
            return Err(Error::NonPositiveFactor {
                factor: 1.0 + arg,
                n: x.len(),
                bound: g.bound(),
            });
        }
        sl += arg.ln_1p();
    }
    Ok(sl)
}

/// Filtered likelihood path `t -> X_{n,t}` of asset `i` for the given draws.
pub fn filtered_path_from_draws(
    spec: &ProductExperimentSpec,
    i: usize,
    x: &[f64],
) -> Result<LikelihoodPath> {
    Ok(spec.projector(i)?.evaluate(x, 1.0)?.likelihood_path())
}

/// Filtered likelihood path with fresh uniforms from `rng`.
pub fn filtered_likelihood_path(
    spec: &ProductExperimentSpec,
    i: usize,
    rng: RngStreamSpec,
) -> Result<LikelihoodPath> {
    let x = draw_uniforms(spec.n(), &mut rng.rng());
    filtered_path_from_draws(spec, i, &x)
}

/// `Z_n(t)` on the grid for the given draws.
pub fn central_sequence_path(
    spec: &ProductExperimentSpec,
    i: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    Ok(spec.projector(i)?.evaluate(x, 1.0)?.z)
}

/// `|log X_{n,1} - (Z_n(1) - sigma^2(1)/2)|` for one draw set.
pub fn lan_remainder(spec: &ProductExperimentSpec, i: usize, x: &[f64]) -> Result<f64> {
    let pair = spec.pair(i)?;
    let sigma2 = cumulative_variance(&pair.gamma, 1.0)?;
    let log_x = static_log_likelihood(&pair.g, x)?;
    let sqrt_n = (x.len() as f64).sqrt();
    let z = x.iter().map(|&xj| pair.g.eval(xj)).sum::<f64>() / sqrt_n;
    Ok((log_x - (z - 0.5 * sigma2)).abs())
}

/// `sigma_n^2(t)` on the grid.
pub fn sigma_n_path(spec: &ProductExperimentSpec, i: usize, x: &[f64]) -> Result<Vec<f64>> {
    Ok(spec.projector(i)?.evaluate(x, 1.0)?.sigma_n2())
}

/// `n^{-1} sum_j M_j(t)^2` on the grid.
pub fn quadratic_variation_check(
    spec: &ProductExperimentSpec,
    i: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    Ok(spec.projector(i)?.evaluate(x, 1.0)?.quadratic_variation)
}

/// Mean of `X_{n,t}` over independent paths.
pub fn martingale_check(
    spec: &ProductExperimentSpec,
    i: usize,
    t: f64,
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<MonteCarloEstimate> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("{t} outside [0, 1]"),
        });
    }
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    let proj = spec.projector(i)?;
    let n = spec.n();
    let blocks = exec.run_blocks(rng, reps, |r, len| -> Result<RunningStats> {
        let mut acc = RunningStats::new();
        let mut x = vec![0.0; n];
        for _ in 0..len {
            for xj in x.iter_mut() {
                *xj = open_uniform(r);
            }
            acc.push(proj.log_likelihood_at(&x, t, 1.0)?.exp());
        }
        Ok(acc)
    });
    let mut acc = RunningStats::new();
    for b in blocks {
        acc.merge(&b?);
    }
    acc.estimate(rng.master_seed)
}

/// Filtered paths for `reps` independent draw sets, in replication order.
pub fn simulate_filtered(
    spec: &ProductExperimentSpec,
    i: usize,
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<Vec<FilteredPaths>> {
    let proj = spec.projector(i)?;
    let n = spec.n();
    exec.try_collect(rng, reps, |r| {
        let x = draw_uniforms(n, r);
        proj.evaluate(&x, 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard::HazardDerivative;
    use crate::tangent::{linear, zero};

    fn linear_spec(n: usize) -> ProductExperimentSpec {
        ProductExperimentSpec::with_small_sample(
            vec![HazardPair::from_tangent(linear())],
            n,
            TimeGrid::unit_default(),
        )
        .unwrap()
    }

    #[test]
    fn zero_tangent_path_is_one() {
        let spec = ProductExperimentSpec::single(zero(), 100).unwrap();
        let p = filtered_likelihood_path(&spec, 0, RngStreamSpec::new(1, 0)).unwrap();
        assert!(p.values.iter().all(|&v| v == 1.0));
        let x = draw_uniforms(100, &mut RngStreamSpec::new(1, 0).rng());
        assert!(central_sequence_path(&spec, 0, &x)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert_eq!(lan_remainder(&spec, 0, &x).unwrap(), 0.0);
        assert!(sigma_n_path(&spec, 0, &x)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(quadratic_variation_check(&spec, 0, &x)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn starts_at_one() {
        let spec = ProductExperimentSpec::single(linear(), 1000).unwrap();
        for seed in 0..5 {
            let p = filtered_likelihood_path(&spec, 0, RngStreamSpec::new(seed, 0)).unwrap();
            assert_eq!(p.values[0], 1.0);
        }
    }

    #[test]
    fn single_factor_hand_evaluation() {
        let spec = linear_spec(1);
        let x = [0.25];
        let p = filtered_path_from_draws(&spec, 0, &x).unwrap();
        assert!((p.terminal() - 1.5).abs() < 1e-15);
        let z = central_sequence_path(&spec, 0, &x).unwrap();
        assert!((z.last().unwrap() - 0.5).abs() < 1e-15);
        // log 1.5 - (0.5 - 1/6)
        let oracle = 1.5f64.ln() - (0.5 - 1.0 / 6.0);
        assert!((lan_remainder(&spec, 0, &x).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 0.072_132).abs() < 1e-6);
        let s = sigma_n_path(&spec, 0, &x).unwrap();
        assert!((s.last().unwrap() - 2.0 * (0.5 - 1.5f64.ln())).abs() < 1e-15);
        assert!((s.last().unwrap() - 0.189_070).abs() < 1e-6);
    }

    #[test]
    fn terminal_equals_static_product_exactly() {
        let spec = ProductExperimentSpec::single(linear(), 500).unwrap();
        for seed in 0..10 {
            let x = draw_uniforms(500, &mut RngStreamSpec::new(seed, 0).rng());
            let p = filtered_path_from_draws(&spec, 0, &x).unwrap();
            let s = static_log_likelihood(&linear(), &x).unwrap();
            assert_eq!(p.terminal_log(), s);
        }
    }

    #[test]
    fn log_identity_per_draw() {
        let spec = ProductExperimentSpec::single(linear(), 400).unwrap();
        let x = draw_uniforms(400, &mut RngStreamSpec::new(3, 0).rng());
        let f = spec.projector(0).unwrap().evaluate(&x, 1.0).unwrap();
        for ((l, s), z) in f.log_x.iter().zip(f.sigma_n2()).zip(&f.z) {
            assert!((l + 0.5 * s - z).abs() < 1e-12);
            assert!(s >= -1e-12, "log(1 + x) <= x forces sigma_n^2 >= 0");
        }
    }

    #[test]
    fn single_time_matches_grid() {
        let spec = ProductExperimentSpec::single(linear(), 300).unwrap();
        let x = draw_uniforms(300, &mut RngStreamSpec::new(4, 0).rng());
        let proj = spec.projector(0).unwrap();
        let f = proj.evaluate(&x, 1.0).unwrap();
        for (k, &t) in spec.grid().points().iter().enumerate() {
            let l = proj.log_likelihood_at(&x, t, 1.0).unwrap();
            assert!((l - f.log_x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_factor_is_an_error() {
        let spec = linear_spec(1);
        // 1 + g(1)/1 = 0 at x = 1
        let err = filtered_path_from_draws(&spec, 0, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveFactor { .. }));
    }

    #[test]
    fn safety_factor_enforced() {
        assert!(matches!(
            ProductExperimentSpec::single(linear(), 3),
            Err(Error::SampleTooSmall { .. })
        ));
        assert!(ProductExperimentSpec::single(linear(), 4).is_ok());
    }

    #[test]
    fn martingale_for_zero_tangent_is_exact() {
        let spec = ProductExperimentSpec::single(zero(), 50).unwrap();
        let e = martingale_check(
            &spec,
            0,
            0.5,
            100,
            RngStreamSpec::new(1, 0),
            &Executor::default(),
        )
        .unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn martingale_for_linear_tangent() {
        let spec = ProductExperimentSpec::single(linear(), 1000).unwrap();
        for (k, t) in [0.5, 1.0].into_iter().enumerate() {
            let e = martingale_check(
                &spec,
                0,
                t,
                10_000,
                RngStreamSpec::new(21, k as u64),
                &Executor::new(4),
            )
            .unwrap();
            assert!(e.covers(1.0, 3.0), "t={t}: {e:?}");
        }
    }

    #[test]
    fn central_sequence_variance() {
        let spec = ProductExperimentSpec::single(linear(), 200).unwrap();
        let paths = simulate_filtered(
            &spec,
            0,
            10_000,
            RngStreamSpec::new(2, 0),
            &Executor::new(4),
        )
        .unwrap();
        let z1: Vec<f64> = paths.iter().map(|p| *p.z.last().unwrap()).collect();
        assert!((crate::stats::variance(&z1) - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn quadratic_variation_near_sigma2() {
        let spec = ProductExperimentSpec::single(linear(), 10_000).unwrap();
        let x = draw_uniforms(10_000, &mut RngStreamSpec::new(6, 0).rng());
        let qv = quadratic_variation_check(&spec, 0, &x).unwrap();
        assert!((qv.last().unwrap() - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn numeric_hazard_pair_works() {
        let gamma = HazardDerivative::from_fn("1-u", |u| 1.0 - u);
        let pair = HazardPair::from_hazard(gamma).unwrap();
        let spec =
            ProductExperimentSpec::with_small_sample(vec![pair], 1, TimeGrid::unit_default())
                .unwrap();
        let p = filtered_path_from_draws(&spec, 0, &[0.25]).unwrap();
        assert!((p.terminal() - 1.5).abs() < 1e-8);
    }
}
