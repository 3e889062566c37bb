use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{MonteCarloEstimate, RunningStats};
use crate::quadrature::{integrate, DEFAULT_TOL};
use crate::rng::{Executor, RngStreamSpec, StreamRng};
use crate::stats::normal_cdf;
use crate::tangent::RealFn;

/// Deterministic short rate `rho`.
#[derive(Clone)]
pub enum RateCurve {
    Constant(f64),
    Curve(RealFn),
}

impl fmt::Debug for RateCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateCurve::Constant(r) => write!(f, "Constant({r})"),
            RateCurve::Curve(_) => f.write_str("Curve(..)"),
        }
    }
}

impl RateCurve {
    /// `int_a^b rho(u) du`
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            RateCurve::Constant(r) => Ok(r * (b - a)),
            RateCurve::Curve(f) => integrate(|u| f(u), a, b, DEFAULT_TOL),
        }
    }
}

/// A European call observed at `eval_time` with spot `spot`, in a model whose
/// likelihood `dQ'_1(t)/dQ` is lognormal with log-variance `sigma_eff^2`.
#[derive(Debug, Clone)]
pub struct CallSpec {
    pub s0: f64,
    pub strike: f64,
    pub rate: RateCurve,
    pub horizon: f64,
    pub eval_time: f64,
    pub spot: f64,
    pub sigma_eff: f64,
}

impl CallSpec {
    /// Spot and initial price `spot`, zero rate, evaluated at `t = 0` with `T = 1`.
    pub fn lognormal(spot: f64, strike: f64, sigma_eff: f64) -> Result<Self> {
        Self {
            s0: spot,
            strike,
            rate: RateCurve::Constant(0.0),
            horizon: 1.0,
            eval_time: 0.0,
            spot,
            sigma_eff,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("s0", self.s0)?;
        positive("spot", self.spot)?;
        positive("horizon", self.horizon)?;
        positive("sigma", self.sigma_eff)?;
        if !(self.strike >= 0.0 && self.strike.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "strike",
                reason: format!("must be nonnegative and finite, got {}", self.strike),
            });
        }
        if !(0.0..=self.horizon).contains(&self.eval_time) {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!(
                    "need 0 <= t <= T = {}, got {}",
                    self.horizon, self.eval_time
                ),
            });
        }
        Ok(self)
    }

    pub fn with_rate(mut self, rate: RateCurve) -> Self {
        self.rate = rate;
        self
    }

    pub fn with_spot(&self, spot: f64) -> Self {
        Self {
            spot,
            ..self.clone()
        }
    }

    /// `exp(-int_t^T rho)`
    pub fn discount(&self) -> Result<f64> {
        Ok((-self.rate.integral(self.eval_time, self.horizon)?).exp())
    }
}

/// `Phi(x) = 1{x > c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeymanPearsonTest {
    pub threshold: f64,
}

impl NeymanPearsonTest {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: format!("need c >= 0, got {threshold}"),
            });
        }
        Ok(Self { threshold })
    }

    #[inline]
    pub fn accepts(&self, lr: f64) -> bool {
        lr > self.threshold
    }

    #[inline]
    pub fn phi(&self, lr: f64) -> f64 {
        if self.accepts(lr) {
            1.0
        } else {
            0.0
        }
    }
}

/// `c_t = (K / s_t) exp(-int_t^T rho)`.
pub fn np_threshold(spec: &CallSpec) -> Result<f64> {
    Ok(spec.strike / spec.spot * spec.discount()?)
}

/// Level and power of `1{L > c}` when `log L ~ N(-s^2/2, s^2)` under the null.
pub fn lognormal_level_power(sigma_eff: f64, c: f64) -> Result<(f64, f64)> {
    if !(sigma_eff > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("need sigma_eff > 0, got {sigma_eff}"),
        });
    }
    if c == 0.0 {
        return Ok((1.0, 1.0));
    }
    if c == f64::INFINITY {
        return Ok((0.0, 0.0));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter {
            name: "threshold",
            reason: format!("need c >= 0, got {c}"),
        });
    }
    let half = 0.5 * sigma_eff * sigma_eff;
    let ln_c = c.ln();
    let level = normal_cdf(-(ln_c + half) / sigma_eff);
    let power = normal_cdf(-(ln_c - half) / sigma_eff);
    Ok((level, power))
}

/// `E_Q (L - k)^+` for the lognormal likelihood.
pub fn lognormal_call_on_likelihood(sigma_eff: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return 1.0 - k;
    }
    let half = 0.5 * sigma_eff * sigma_eff;
    let ln_k = k.ln();
    normal_cdf((-ln_k + half) / sigma_eff) - k * normal_cdf((-ln_k - half) / sigma_eff)
}

/// Source of likelihood-ratio draws.
pub trait LikelihoodSampler: Sync {
    /// A draw of the likelihood ratio under the null `Q`.
    fn sample_null(&self, rng: &mut StreamRng) -> f64;

    /// A null draw together with, when the model allows it, a draw of the
    /// same ratio under the alternative built from the same randomness.
    fn sample_coupled(&self, rng: &mut StreamRng) -> (f64, Option<f64>) {
        (self.sample_null(rng), None)
    }
}

/// `L = exp(sigma Z -+ sigma^2/2)` under `Q` and `Q'_1` respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalLikelihood {
    pub sigma: f64,
}

impl LikelihoodSampler for LognormalLikelihood {
    fn sample_null(&self, rng: &mut StreamRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.sigma * z - 0.5 * self.sigma * self.sigma).exp()
    }

    fn sample_coupled(&self, rng: &mut StreamRng) -> (f64, Option<f64>) {
        let z: f64 = StandardNormal.sample(rng);
        let s = self.sigma;
        let half = 0.5 * s * s;
        ((s * z - half).exp(), Some((s * z + half).exp()))
    }
}

/// `L = 1`: alternative and null coincide.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnitLikelihood;

impl LikelihoodSampler for UnitLikelihood {
    fn sample_null(&self, _rng: &mut StreamRng) -> f64 {
        1.0
    }

    fn sample_coupled(&self, _rng: &mut StreamRng) -> (f64, Option<f64>) {
        (1.0, Some(1.0))
    }
}

/// How the power was estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PowerMode {
    /// Closed form.
    Exact,
    /// Mean of `Phi(L)` over draws under the alternative.
    Alternative,
    /// Mean of `L Phi(L)` over draws under the null.
    ChangeOfMeasure,
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerMode::Exact => "exact",
            PowerMode::Alternative => "alternative",
            PowerMode::ChangeOfMeasure => "change-of-measure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPower {
    pub level: MonteCarloEstimate,
    pub power: MonteCarloEstimate,
    pub mode: PowerMode,
}

/// Per-replication test outcomes: `(Phi under Q, power contribution)`.
fn test_outcomes(
    sampler: &dyn LikelihoodSampler,
    test: &NeymanPearsonTest,
    rng: &mut StreamRng,
    mode: PowerMode,
) -> Result<(f64, f64, PowerMode)> {
    let (null, alt) = match mode {
        PowerMode::Alternative => sampler.sample_coupled(rng),
        _ => (sampler.sample_null(rng), None),
    };
    if null < 0.0 || null.is_nan() {
        return Err(Error::NegativeLikelihood(null));
    }
    let level = test.phi(null);
    match alt {
        Some(a) => {
            if a < 0.0 || a.is_nan() {
                return Err(Error::NegativeLikelihood(a));
            }
            Ok((level, test.phi(a), PowerMode::Alternative))
        }
        None => Ok((level, null * level, PowerMode::ChangeOfMeasure)),
    }
}

/// Monte Carlo level and power of `test`. Power is estimated under the
/// alternative when the sampler provides one and `mode` asks for it,
/// otherwise through `E_Q(L Phi(L))`.
pub fn mc_level_power(
    sampler: &dyn LikelihoodSampler,
    test: &NeymanPearsonTest,
    reps: usize,
    rng: RngStreamSpec,
    mode: PowerMode,
    exec: &Executor,
) -> Result<LevelPower> {
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    let blocks = exec.run_blocks(rng, reps, |r, len| -> Result<_> {
        let mut level = RunningStats::new();
        let mut power = RunningStats::new();
        let mut used = mode;
        for _ in 0..len {
            let (l, p, m) = test_outcomes(sampler, test, r, mode)?;
            level.push(l);
            power.push(p);
            used = m;
        }
        Ok((level, power, used))
    });
    let mut level = RunningStats::new();
    let mut power = RunningStats::new();
    let mut used = mode;
    for b in blocks {
        let (l, p, m) = b?;
        level.merge(&l);
        power.merge(&p);
        used = m;
    }
    Ok(LevelPower {
        level: level.estimate(rng.master_seed)?,
        power: power.estimate(rng.master_seed)?,
        mode: used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Quantity {
    Exact(f64),
    Estimate(MonteCarloEstimate),
}

impl Quantity {
    pub fn value(&self) -> f64 {
        match self {
            Quantity::Exact(v) => *v,
            Quantity::Estimate(e) => e.mean,
        }
    }

    pub fn stderr(&self) -> f64 {
        match self {
            Quantity::Exact(_) => 0.0,
            Quantity::Estimate(e) => e.stderr,
        }
    }
}

/// Price split into the power and level of the Neyman-Pearson test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerDecomposition {
    pub level: Quantity,
    pub power: Quantity,
    pub price: Quantity,
    pub mode: PowerMode,
}

/// `price = s_t * power - exp(-int_t^T rho) * K * level`.
///
/// Estimated inputs are treated as independent when combining standard errors.
pub fn price_power_decomposition(
    spec: &CallSpec,
    level: Quantity,
    power: Quantity,
) -> Result<PowerDecomposition> {
    for (name, q) in [("level", level), ("power", power)] {
        if !(0.0..=1.0).contains(&q.value()) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must lie in [0, 1], got {}", q.value()),
            });
        }
    }
    let dk = spec.discount()? * spec.strike;
    let price_value = spec.spot * power.value() - dk * level.value();
    let (price, mode) = match (level, power) {
        (Quantity::Exact(_), Quantity::Exact(_)) => {
            (Quantity::Exact(price_value), PowerMode::Exact)
        }
        _ => {
            let reps = [level, power]
                .iter()
                .filter_map(|q| match q {
                    Quantity::Estimate(e) => Some(e.reps),
                    Quantity::Exact(_) => None,
                })
                .min()
                .unwrap_or(0);
            let seed = [level, power]
                .iter()
                .find_map(|q| match q {
                    Quantity::Estimate(e) => Some(e.seed),
                    Quantity::Exact(_) => None,
                })
                .unwrap_or(0);
            let stderr =
                ((spec.spot * power.stderr()).powi(2) + (dk * level.stderr()).powi(2)).sqrt();
            (
                Quantity::Estimate(MonteCarloEstimate {
                    mean: price_value,
                    stderr,
                    reps,
                    seed,
                }),
                PowerMode::Alternative,
            )
        }
    };
    Ok(PowerDecomposition {
        level,
        power,
        price,
        mode,
    })
}

/// Closed-form decomposition in the lognormal model.
pub fn exact_power_decomposition(spec: &CallSpec) -> Result<PowerDecomposition> {
    let c = np_threshold(spec)?;
    let (level, power) = lognormal_level_power(spec.sigma_eff, c)?;
    price_power_decomposition(spec, Quantity::Exact(level), Quantity::Exact(power))
}

/// Monte Carlo decomposition. Each replication evaluates the test on a null
/// draw and on an alternative draw sharing the same randomness, so the price
/// standard error comes from the paired per-replication prices.
pub fn mc_power_decomposition(
    spec: &CallSpec,
    sampler: &dyn LikelihoodSampler,
    reps: usize,
    rng: RngStreamSpec,
    mode: PowerMode,
    exec: &Executor,
) -> Result<PowerDecomposition> {
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    let test = NeymanPearsonTest::new(np_threshold(spec)?)?;
    let dk = spec.discount()? * spec.strike;
    let s = spec.spot;
    let blocks = exec.run_blocks(rng, reps, |r, len| -> Result<_> {
        let mut level = RunningStats::new();
        let mut power = RunningStats::new();
        let mut price = RunningStats::new();
        let mut used = mode;
        for _ in 0..len {
            let (l, p, m) = test_outcomes(sampler, &test, r, mode)?;
            level.push(l);
            power.push(p);
            price.push(s * p - dk * l);
            used = m;
        }
        Ok((level, power, price, used))
    });
    let mut level = RunningStats::new();
    let mut power = RunningStats::new();
    let mut price = RunningStats::new();
    let mut used = mode;
    for b in blocks {
        let (l, p, q, m) = b?;
        level.merge(&l);
        power.merge(&p);
        price.merge(&q);
        used = m;
    }
    let seed = rng.master_seed;
    let level = level.estimate(seed)?;
    let power = power.estimate(seed)?;
    let paired = price.estimate(seed)?;
    Ok(PowerDecomposition {
        level: Quantity::Estimate(level),
        power: Quantity::Estimate(power),
        price: Quantity::Estimate(MonteCarloEstimate {
            mean: s * power.mean - dk * level.mean,
            ..paired
        }),
        mode: used,
    })
}

/// Source of terminal asset prices under `Q`.
pub trait TerminalSampler: Sync {
    fn sample_terminal(&self, rng: &mut StreamRng) -> f64;
}

/// `S_T = s_t exp(int_t^T rho) L` with lognormal `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalTerminal {
    pub forward: f64,
    pub likelihood: LognormalLikelihood,
}

impl LognormalTerminal {
    pub fn for_spec(spec: &CallSpec) -> Result<Self> {
        Ok(Self {
            forward: spec.spot / spec.discount()?,
            likelihood: LognormalLikelihood {
                sigma: spec.sigma_eff,
            },
        })
    }
}

impl TerminalSampler for LognormalTerminal {
    fn sample_terminal(&self, rng: &mut StreamRng) -> f64 {
        self.forward * self.likelihood.sample_null(rng)
    }
}

/// `E_Q(exp(-int_t^T rho) (S_T - K) 1{S_T > K})` by plain Monte Carlo.
pub fn price_direct_mc(
    spec: &CallSpec,
    sampler: &dyn TerminalSampler,
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<MonteCarloEstimate> {
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    let d = spec.discount()?;
    let k = spec.strike;
    let blocks = exec.run_blocks(rng, reps, |r, len| -> Result<RunningStats> {
        let mut acc = RunningStats::new();
        for _ in 0..len {
            let st = sampler.sample_terminal(r);
            if st < 0.0 || st.is_nan() {
                return Err(Error::NegativeLikelihood(st));
            }
            acc.push(if st > k { d * (st - k) } else { 0.0 });
        }
        Ok(acc)
    });
    let mut acc = RunningStats::new();
    for b in blocks {
        acc.merge(&b?);
    }
    acc.estimate(rng.master_seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    pub direct: MonteCarloEstimate,
    pub decomposition: PowerDecomposition,
    /// Decomposition stderr over direct stderr; NaN when the direct
    /// estimator has zero spread.
    pub stderr_ratio: f64,
}

/// Direct estimator with `budget` draws against the decomposition with
/// `budget / 2` null and `budget / 2` alternative draws.
pub fn variance_compare(
    spec: &CallSpec,
    budget: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<VarianceReport> {
    if budget == 0 || !budget.is_multiple_of(2) {
        return Err(Error::InvalidParameter {
            name: "reps",
            reason: format!("budget must be positive and even, got {budget}"),
        });
    }
    let terminal = LognormalTerminal::for_spec(spec)?;
    let direct = price_direct_mc(spec, &terminal, budget, rng.child(0), exec)?;
    let decomposition = mc_power_decomposition(
        spec,
        &terminal.likelihood,
        budget / 2,
        rng.child(1),
        PowerMode::Alternative,
        exec,
    )?;
    let stderr_ratio = if direct.stderr > 0.0 {
        decomposition.price.stderr() / direct.stderr
    } else {
        f64::NAN
    };
    Ok(VarianceReport {
        direct,
        decomposition,
        stderr_ratio,
    })
}

/// `Delta = E_{Q'_1(t)} Phi_t`, the power of the test at `np_threshold`.
pub fn delta_as_power(spec: &CallSpec) -> Result<f64> {
    if !(spec.sigma_eff > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("need sigma_eff > 0, got {}", spec.sigma_eff),
        });
    }
    Ok(lognormal_level_power(spec.sigma_eff, np_threshold(spec)?)?.1)
}

/// Default spot bump for finite differences.
pub fn default_bump(spec: &CallSpec) -> f64 {
    1e-4 * spec.spot
}

fn level_at(spec: &CallSpec, x: f64) -> Result<f64> {
    Ok(lognormal_level_power(spec.sigma_eff, np_threshold(&spec.with_spot(x))?)?.0)
}

fn power_at(spec: &CallSpec, x: f64) -> Result<f64> {
    Ok(lognormal_level_power(spec.sigma_eff, np_threshold(&spec.with_spot(x))?)?.1)
}

fn central_difference<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || h >= x {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("need 0 < h < spot, got {h}"),
        });
    }
    let up = f(x + h)?;
    let mid = f(x)?;
    let down = f(x - h)?;
    let forward = (up - mid) / h;
    let backward = (mid - down) / h;
    let scale = forward.abs().max(backward.abs());
    if scale > 1e-12 && (forward - backward).abs() > 0.1 * scale {
        return Err(Error::BumpTooLarge { forward, backward });
    }
    Ok((up - down) / (2.0 * h))
}

/// `Gamma = (K exp(-int_t^T rho) / x) d/dx E_Q(Phi_t)`, differentiating the
/// level by central differences.
pub fn gamma_power_relation(spec: &CallSpec, h: f64) -> Result<f64> {
    let x = spec.spot;
    let dk = spec.strike * spec.discount()?;
    let dlevel = central_difference(|s| level_at(spec, s), x, h)?;
    Ok(dk / x * dlevel)
}

/// `Gamma = d/dx E_{Q'_1(t)}(Phi_t)`, differentiating the power.
pub fn gamma_from_power(spec: &CallSpec, h: f64) -> Result<f64> {
    central_difference(|s| power_at(spec, s), spec.spot, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaCheck {
    /// Central difference of the Monte Carlo price in the spot.
    pub finite_difference: MonteCarloEstimate,
    /// `E_Q(L Phi(L))` at the unbumped spot, on the same draws.
    pub power: MonteCarloEstimate,
}

/// Central difference of the Monte Carlo decomposition price with common
/// random numbers: every bumped price reuses the same null draws and
/// estimates the power by change of measure.
pub fn mc_delta_finite_difference(
    spec: &CallSpec,
    h: f64,
    reps: usize,
    rng: RngStreamSpec,
    exec: &Executor,
) -> Result<DeltaCheck> {
    if !(h > 0.0) || h >= spec.spot {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("need 0 < h < spot, got {h}"),
        });
    }
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    let sampler = LognormalLikelihood {
        sigma: spec.sigma_eff,
    };
    let dk = spec.discount()? * spec.strike;
    let s = spec.spot;
    let c_up = np_threshold(&spec.with_spot(s + h))?;
    let c_mid = np_threshold(spec)?;
    let c_down = np_threshold(&spec.with_spot(s - h))?;
    let price = |x: f64, c: f64, l: f64| if l > c { x * l - dk } else { 0.0 };
    let blocks = exec.run_blocks(rng, reps, |r, len| {
        let mut fd = RunningStats::new();
        let mut power = RunningStats::new();
        for _ in 0..len {
            let l = sampler.sample_null(r);
            fd.push((price(s + h, c_up, l) - price(s - h, c_down, l)) / (2.0 * h));
            power.push(if l > c_mid { l } else { 0.0 });
        }
        (fd, power)
    });
    let mut fd = RunningStats::new();
    let mut power = RunningStats::new();
    for (f, p) in blocks {
        fd.merge(&f);
        power.merge(&p);
    }
    Ok(DeltaCheck {
        finite_difference: fd.estimate(rng.master_seed)?,
        power: power.estimate(rng.master_seed)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KGrid {
    pub k_max: f64,
    pub step: f64,
}

impl Default for KGrid {
    fn default() -> Self {
        Self {
            k_max: 5.0,
            step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KrafftPlachky {
    pub minimum: f64,
    pub argmin: f64,
}

/// Grid minimum over `k` of `k E_Q(Phi_t) + E_Q (L - k)^+`; the infimum is
/// the power of the test. A minimum at `k = 0` is legitimate (`k >= 0` is
/// the domain); a minimum at `k_max` means the grid is too short.
pub fn krafft_plachky(spec: &CallSpec, grid: KGrid) -> Result<KrafftPlachky> {
    if !(grid.step > 0.0 && grid.k_max > grid.step) {
        return Err(Error::InvalidParameter {
            name: "k_grid",
            reason: format!(
                "need 0 < step < k_max, got step {} k_max {}",
                grid.step, grid.k_max
            ),
        });
    }
    let c = np_threshold(spec)?;
    let (level, _) = lognormal_level_power(spec.sigma_eff, c)?;
    let steps = (grid.k_max / grid.step).round() as usize;
    let mut best = KrafftPlachky {
        minimum: f64::INFINITY,
        argmin: 0.0,
    };
    let mut best_index = 0;
    for i in 0..=steps {
        let k = i as f64 * grid.step;
        let v = k * level + lognormal_call_on_likelihood(spec.sigma_eff, k);
        if v < best.minimum {
            best = KrafftPlachky {
                minimum: v,
                argmin: k,
            };
            best_index = i;
        }
    }
    if best_index == steps {
        return Err(Error::BoundaryMinimum {
            k: best.argmin,
            value: best.minimum,
        });
    }
    Ok(best)
}

/// Black-Scholes-type call price in the lognormal likelihood model.
pub fn lognormal_call_price(spec: &CallSpec) -> Result<f64> {
    let dk = spec.discount()? * spec.strike;
    Ok(spec.spot * lognormal_call_on_likelihood(spec.sigma_eff, dk / spec.spot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_pdf;

    const BS_PRICE: f64 = 0.079_655_674_554_058;

    fn atm() -> CallSpec {
        CallSpec::lognormal(1.0, 1.0, 0.2).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(np_threshold(&atm()).unwrap(), 1.0);
        assert_eq!(np_threshold(&atm().with_spot(2.0)).unwrap(), 0.5);
        let r = atm().with_rate(RateCurve::Constant(0.05));
        assert!((np_threshold(&r).unwrap() - 0.951_229_424_500_714).abs() < 1e-12);
    }

    #[test]
    fn rate_curve_integrates() {
        let r = RateCurve::Curve(std::sync::Arc::new(|u| 0.05 * u));
        assert!((r.integral(0.0, 1.0).unwrap() - 0.025).abs() < 1e-12);
    }

    #[test]
    fn lognormal_level_power_reference() {
        let (level, power) = lognormal_level_power(0.2, 1.0).unwrap();
        // Phi(-0.1), Phi(0.1)
        assert!((level - 0.460_172_162_722_971).abs() < 1e-12);
        assert!((power - 0.539_827_837_277_029).abs() < 1e-12);
        assert_eq!(lognormal_level_power(0.2, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(
            lognormal_level_power(0.2, f64::INFINITY).unwrap(),
            (0.0, 0.0)
        );
        let (l, p) = lognormal_level_power(0.2, 1e-300).unwrap();
        assert!(l > 1.0 - 1e-12 && p > 1.0 - 1e-12);
        let (l, p) = lognormal_level_power(0.2, 1e300).unwrap();
        assert!(l < 1e-12 && p < 1e-12);
    }

    #[test]
    fn test_convention_is_strict() {
        let t = NeymanPearsonTest::new(1.0).unwrap();
        assert_eq!(t.phi(1.0), 0.0);
        assert_eq!(t.phi(1.0 + 1e-15), 1.0);
        assert!(NeymanPearsonTest::new(-1.0).is_err());
    }

    #[test]
    fn decomposition_reproduces_black_scholes() {
        // Phi(0.1) - Phi(-0.1)
        let d = exact_power_decomposition(&atm()).unwrap();
        assert!((d.price.value() - BS_PRICE).abs() < 1e-12);
        assert!((lognormal_call_price(&atm()).unwrap() - BS_PRICE).abs() < 1e-12);
        assert_eq!(d.mode, PowerMode::Exact);
    }

    #[test]
    fn decomposition_boundaries() {
        let spec = atm().with_rate(RateCurve::Constant(0.05));
        let zero =
            price_power_decomposition(&spec, Quantity::Exact(0.0), Quantity::Exact(0.0)).unwrap();
        assert_eq!(zero.price.value(), 0.0);
        let one =
            price_power_decomposition(&spec, Quantity::Exact(1.0), Quantity::Exact(1.0)).unwrap();
        assert!((one.price.value() - (1.0 - (-0.05f64).exp())).abs() < 1e-15);
        assert!(
            price_power_decomposition(&spec, Quantity::Exact(1.5), Quantity::Exact(0.0)).is_err()
        );
    }

    #[test]
    fn mc_level_matches_oracle() {
        let lp = mc_level_power(
            &LognormalLikelihood { sigma: 0.2 },
            &NeymanPearsonTest::new(1.0).unwrap(),
            200_000,
            RngStreamSpec::new(11, 0),
            PowerMode::Alternative,
            &Executor::new(2),
        )
        .unwrap();
        let (level, power) = lognormal_level_power(0.2, 1.0).unwrap();
        assert!(lp.level.covers(level, 3.0));
        assert!(lp.power.covers(power, 3.0));
        assert_eq!(lp.mode, PowerMode::Alternative);
    }

    #[test]
    fn change_of_measure_power_matches_oracle() {
        let lp = mc_level_power(
            &LognormalLikelihood { sigma: 0.2 },
            &NeymanPearsonTest::new(1.0).unwrap(),
            200_000,
            RngStreamSpec::new(12, 0),
            PowerMode::ChangeOfMeasure,
            &Executor::default(),
        )
        .unwrap();
        assert!(lp.power.covers(0.539_827_837_277_029, 3.0));
        assert_eq!(lp.mode, PowerMode::ChangeOfMeasure);
    }

    #[test]
    fn always_accepting_test_is_exact() {
        let lp = mc_level_power(
            &LognormalLikelihood { sigma: 0.2 },
            &NeymanPearsonTest::new(0.0).unwrap(),
            1000,
            RngStreamSpec::new(1, 0),
            PowerMode::Alternative,
            &Executor::default(),
        )
        .unwrap();
        assert_eq!(lp.level.mean, 1.0);
        assert_eq!(lp.level.stderr, 0.0);
    }

    #[test]
    fn degenerate_likelihood() {
        let lp = mc_level_power(
            &UnitLikelihood,
            &NeymanPearsonTest::new(0.5).unwrap(),
            100,
            RngStreamSpec::new(1, 0),
            PowerMode::Alternative,
            &Executor::default(),
        )
        .unwrap();
        assert_eq!((lp.level.mean, lp.power.mean), (1.0, 1.0));
    }

    struct Broken;
    impl LikelihoodSampler for Broken {
        fn sample_null(&self, _: &mut StreamRng) -> f64 {
            -0.5
        }
    }

    #[test]
    fn negative_draw_is_model_violation() {
        let err = mc_level_power(
            &Broken,
            &NeymanPearsonTest::new(1.0).unwrap(),
            10,
            RngStreamSpec::new(1, 0),
            PowerMode::Alternative,
            &Executor::default(),
        )
        .unwrap_err();
        assert_eq!(err, Error::NegativeLikelihood(-0.5));
        let empty = mc_level_power(
            &UnitLikelihood,
            &NeymanPearsonTest::new(1.0).unwrap(),
            0,
            RngStreamSpec::new(1, 0),
            PowerMode::Alternative,
            &Executor::default(),
        );
        assert_eq!(empty.unwrap_err(), Error::EmptySample);
    }

    #[test]
    fn direct_mc_examples() {
        let exec = Executor::new(2);
        let spec = atm();
        let t = LognormalTerminal::for_spec(&spec).unwrap();
        let e = price_direct_mc(&spec, &t, 200_000, RngStreamSpec::new(5, 0), &exec).unwrap();
        assert!(e.covers(BS_PRICE, 3.0));

        let zero_strike = CallSpec {
            strike: 0.0,
            ..atm()
        };
        let e =
            price_direct_mc(&zero_strike, &t, 200_000, RngStreamSpec::new(5, 1), &exec).unwrap();
        assert!(e.covers(1.0, 3.0));

        let flat = CallSpec::lognormal(1.0, 1.0, 1e-6).unwrap();
        let tf = LognormalTerminal::for_spec(&flat).unwrap();
        let e = price_direct_mc(&flat, &tf, 10_000, RngStreamSpec::new(5, 2), &exec).unwrap();
        assert!(e.mean.abs() < 1e-5);
    }

    #[test]
    fn variance_compare_degenerate_and_deterministic() {
        let exec = Executor::new(3);
        let flat = CallSpec::lognormal(1.0, 1.0, 1e-6).unwrap();
        let r = variance_compare(&flat, 20_000, RngStreamSpec::new(8, 0), &exec).unwrap();
        assert!(r.direct.stderr < 1e-7 && r.decomposition.price.stderr() < 1e-4);
        assert!(r.direct.mean.abs() < 1e-5 && r.decomposition.price.value().abs() < 1e-3);

        let spec = CallSpec::lognormal(1.0, 1.0, 1.0).unwrap();
        let a = variance_compare(&spec, 20_000, RngStreamSpec::new(8, 0), &exec).unwrap();
        let b =
            variance_compare(&spec, 20_000, RngStreamSpec::new(8, 0), &Executor::new(1)).unwrap();
        assert_eq!(a, b);
        assert!(variance_compare(&spec, 3, RngStreamSpec::new(8, 0), &exec).is_err());
    }

    #[test]
    fn delta_examples() {
        assert!((delta_as_power(&atm()).unwrap() - 0.539_827_837_277_029).abs() < 1e-12);
        assert!(delta_as_power(&atm().with_spot(1e6)).unwrap() > 1.0 - 1e-12);
        assert!(delta_as_power(&atm().with_spot(1e-6)).unwrap() < 1e-12);
    }

    #[test]
    fn gamma_examples() {
        // phi(d1) / (x sigma sqrt(T - t))
        let oracle = normal_pdf(0.1) / 0.2;
        let g = gamma_power_relation(&atm(), 1e-4).unwrap();
        assert!((g - oracle).abs() < 1e-6);
        assert!((oracle - 1.98477).abs() < 1e-5);
        let deep = atm().with_spot(1e6);
        assert!(gamma_power_relation(&deep, 1e-4 * 1e6).unwrap().abs() < 1e-12);
        let via_power = gamma_from_power(&atm(), 1e-4).unwrap();
        assert!((via_power - g).abs() < 1e-4);
    }

    #[test]
    fn gamma_flags_large_bump() {
        assert!(matches!(
            gamma_power_relation(&atm(), 0.5),
            Err(Error::BumpTooLarge { .. })
        ));
    }

    #[test]
    fn krafft_plachky_examples() {
        let spec = atm();
        let (level, _) = lognormal_level_power(0.2, 1.0).unwrap();
        let at_one = level + lognormal_call_on_likelihood(0.2, 1.0);
        assert!((at_one - 0.539_827_837_277_029).abs() < 1e-12);
        let kp = krafft_plachky(&spec, KGrid::default()).unwrap();
        assert!((kp.minimum - 0.539_828).abs() < 2e-3);
        assert!((kp.argmin - 1.0).abs() < 0.05);
    }

    #[test]
    fn krafft_plachky_boundaries() {
        // huge spot: c ~ 0, level ~ 1, minimum at k = 0 with value E_Q L = 1
        let spec = atm().with_spot(1e12);
        let kp = krafft_plachky(&spec, KGrid::default()).unwrap();
        assert_eq!(kp.argmin, 0.0);
        assert!((kp.minimum - 1.0).abs() < 1e-9);
        // deep out of the money: argmin near c = 10 > k_max
        let far = atm().with_spot(0.1);
        assert!(matches!(
            krafft_plachky(&far, KGrid::default()),
            Err(Error::BoundaryMinimum { .. })
        ));
    }

    #[test]
    fn validation_names_constraint() {
        match CallSpec::lognormal(1.0, 1.0, -1.0).unwrap_err() {
            Error::InvalidParameter { name, .. } => assert_eq!(name, "sigma"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn delta_nondecreasing_in_spot(a in 0.01f64..10.0, b in 0.01f64..10.0, sigma in 0.05f64..2.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let spec = CallSpec::lognormal(1.0, 1.0, sigma).unwrap();
            let d_lo = delta_as_power(&spec.with_spot(lo)).unwrap();
            let d_hi = delta_as_power(&spec.with_spot(hi)).unwrap();
            proptest::prop_assert!(d_lo <= d_hi);
        }

        #[test]
        fn level_nonincreasing_in_threshold(a in 0.0f64..10.0, b in 0.0f64..10.0, sigma in 0.05f64..2.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let l_lo = lognormal_level_power(sigma, lo).unwrap().0;
            let l_hi = lognormal_level_power(sigma, hi).unwrap().0;
            proptest::prop_assert!(l_hi <= l_lo);
        }

        #[test]
        fn decomposition_identity_is_algebraic(level in 0.0f64..1.0, power in 0.0f64..1.0, spot in 0.1f64..5.0, r in -0.1f64..0.1) {
            let spec = CallSpec::lognormal(spot, 1.0, 0.3).unwrap().with_rate(RateCurve::Constant(r));
            let d = price_power_decomposition(&spec, Quantity::Exact(level), Quantity::Exact(power)).unwrap();
            let expected = spot * power - (-r).exp() * level;
            proptest::prop_assert_eq!(d.price.value(), expected);
        }
    }
}
