//! Hazard-rate derivatives and the isometry between tangents and hazards.
//!
//! `R(g)(x) = g(x) - int_x^1 g / (1 - x)` maps a centered tangent to its
//! hazard-rate derivative; `L(gamma)(x) = gamma(x) - int_0^x gamma(u)/(1 - u) du`
//! inverts it. Truncating a hazard at time `t` and mapping back with `L`
//! gives the conditional expectation of `g` given the observations up to `t`.
//!
//! Both operators are singular at `x = 1`. Closed forms (shipped with the
//! built-in tangents) evaluate through the singularity by its left limit;
//! numerically constructed hazards are only defined on `[0, 1 - 1e-6]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_lenient, DEFAULT_TOL};
use crate::tangent::{RealFn, TangentClosedForm, TangentFunction, VALIDATION_GRID};

/// Right end of the domain of numerically evaluated hazards.
pub const NUMERIC_DOMAIN_END: f64 = 1.0 - 1e-6;

type FallibleFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub struct HazardDerivative {
    label: String,
    eval: FallibleFn,
    /// `x -> int_0^x gamma(u)/(1 - u) du`
    compensator: Option<RealFn>,
    domain_end: f64,
}

impl fmt::Debug for HazardDerivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HazardDerivative")
            .field("label", &self.label)
            .field("closed_form", &self.compensator.is_some())
            .field("domain_end", &self.domain_end)
            .finish()
    }
}

impl HazardDerivative {
    /// A hazard given directly as a function on `[0, 1]`.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(move |x| Ok(f(x))),
            compensator: None,
            domain_end: 1.0,
        }
    }

    /// Attach a closed form for `int_0^x gamma(u)/(1 - u) du`.
    pub fn with_compensator<F>(mut self, k: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.compensator = Some(Arc::new(k));
        self
    }

    /// `gamma = sigma`, constant volatility.
    pub fn constant(sigma: f64) -> Self {
        Self::from_fn(format!("constant({sigma})"), move |_| sigma)
            .with_compensator(move |x| -sigma * (1.0 - x).ln())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_closed_form(&self) -> bool {
        self.compensator.is_some()
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        (self.eval)(x)
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter {
                name: "x",
                reason: format!("{x} outside [0, 1]"),
            });
        }
        if x > self.domain_end {
            return Err(Error::Singularity(format!(
                "hazard `{}` is evaluated numerically only on [0, {}]; x = {x}",
                self.label, self.domain_end
            )));
        }
        Ok(())
    }

    /// `int_0^x gamma(u)/(1 - u) du`.
    pub fn compensator(&self, x: f64) -> Result<f64> {
        if let Some(k) = &self.compensator {
            self.check_domain(x)?;
            return Ok(k(x));
        }
        self.check_domain(x)?;
        if x >= 1.0 {
            return Err(Error::Singularity(format!(
                "int_0^1 gamma(u)/(1 - u) du diverges for hazard `{}` without a closed form",
                self.label
            )));
        }
        let value = integrate(
            |u| match (self.eval)(u) {
                Ok(v) => v / (1.0 - u),
                Err(_) => f64::NAN,
            },
            0.0,
            x,
            DEFAULT_TOL,
        )
        .map_err(|e| match e {
            Error::QuadratureNonConvergence { .. } => Error::Singularity(format!(
                "int_0^{x} gamma(u)/(1 - u) du does not converge for hazard `{}`",
                self.label
            )),
            other => other,
        })?;
        Ok(value)
    }

    /// `sigma^2(t) = int_0^t gamma^2`.
    pub fn cumvar(&self, t: f64) -> Result<f64> {
        cumulative_variance(self, t)
    }
}

/// `R(g)`: the hazard-rate derivative of the path with tangent `g`.
pub fn hazard_derivative(g: &TangentFunction) -> HazardDerivative {
    let label = format!("R({})", g.label());
    match g.closed_form() {
        Some(cf) => {
            let eval = g.eval_fn();
            let tail = cf.tail_mean.clone();
            let tail_k = cf.tail_mean.clone();
            HazardDerivative {
                label,
                eval: Arc::new(move |x| Ok(eval(x) - tail(x))),
                // L(gamma) = g forces int_0^x gamma/(1 - u) = gamma - g = -tail mean
                compensator: Some(Arc::new(move |x| -tail_k(x))),
                domain_end: 1.0,
            }
        }
        None => {
            let eval = g.eval_fn();
            HazardDerivative {
                label,
                eval: Arc::new(move |x| {
                    let h = 1.0 - x;
                    let tail = integrate(|u| eval(u), x, 1.0, (DEFAULT_TOL * h).max(1e-16))?;
                    Ok(eval(x) - tail / h)
                }),
                compensator: None,
                domain_end: NUMERIC_DOMAIN_END,
            }
        }
    }
}

/// `L(gamma)`: the tangent whose hazard-rate derivative is `gamma`.
pub fn inverse_hazard(gamma: &HazardDerivative) -> Result<TangentFunction> {
    let label = format!("L({})", gamma.label());
    let end = gamma.domain_end.min(NUMERIC_DOMAIN_END);
    let probe = gamma.compensator(if gamma.has_closed_form() {
        gamma.domain_end
    } else {
        end
    });
    match probe {
        Ok(v) if v.is_finite() => {}
        Ok(v) => {
            return Err(Error::Singularity(format!(
                "int_0^x gamma(u)/(1 - u) du is {v} near u = 1 for hazard `{}`",
                gamma.label
            )))
        }
        Err(e) => return Err(e),
    }

    let tangent = match &gamma.compensator {
        Some(k) => {
            let eval = gamma.eval.clone();
            let k_eval = k.clone();
            let k_tail = k.clone();
            let k_anti = k.clone();
            let f = move |x: f64| eval(x).unwrap_or(f64::NAN) - k_eval(x);
            let bound = grid_sup(&f);
            TangentFunction::new(label, bound, f).with_closed_form(TangentClosedForm {
                antiderivative: Arc::new(move |x| (1.0 - x) * k_anti(x)),
                tail_mean: Arc::new(move |x| -k_tail(x)),
            })
        }
        None => {
            let eval = gamma.eval.clone();
            let f = move |x: f64| {
                let x = x.min(end);
                let gx = eval(x).unwrap_or(f64::NAN);
                let k = integrate_lenient(
                    |u| eval(u).map(|v| v / (1.0 - u)).unwrap_or(f64::NAN),
                    0.0,
                    x,
                    DEFAULT_TOL,
                );
                gx - k
            };
            let bound = grid_sup(&f);
            TangentFunction::new(label, bound, f)
        }
    };
    Ok(tangent)
}

fn grid_sup<F: Fn(f64) -> f64>(f: &F) -> f64 {
    (0..VALIDATION_GRID)
        .map(|k| f(k as f64 / (VALIDATION_GRID - 1) as f64).abs())
        .fold(0.0, f64::max)
}

/// `L(gamma 1_[0,t])(x)`, the conditional expectation of `L(gamma)` given the
/// observations up to time `t`.
pub fn conditional_projection(gamma: &HazardDerivative, t: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("{t} outside [0, 1]"),
        });
    }
    if x <= t {
        Ok(gamma.eval(x)? - gamma.compensator(x)?)
    } else {
        gamma.check_domain(x)?;
        Ok(-gamma.compensator(t)?)
    }
}

/// `int_0^t gamma^2`.
pub fn cumulative_variance(gamma: &HazardDerivative, t: f64) -> Result<f64> {
    cross_variance(gamma, gamma, t)
}

/// `int_0^t gamma_i gamma_j`.
pub fn cross_variance(a: &HazardDerivative, b: &HazardDerivative, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("{t} outside [0, 1]"),
        });
    }
    let end = t.min(a.domain_end).min(b.domain_end);
    integrate(
        |u| {
            let va = (a.eval)(u).unwrap_or(f64::NAN);
            let vb = (b.eval)(u).unwrap_or(f64::NAN);
            va * vb
        },
        0.0,
        end,
        DEFAULT_TOL,
    )
}

/// A tangent together with its hazard-rate derivative.
#[derive(Debug, Clone)]
pub struct HazardPair {
    pub g: TangentFunction,
    pub gamma: HazardDerivative,
    linked: bool,
}

impl HazardPair {
    pub fn from_tangent(g: TangentFunction) -> Self {
        let gamma = hazard_derivative(&g);
        Self {
            g,
            gamma,
            linked: true,
        }
    }

    pub fn from_hazard(gamma: HazardDerivative) -> Result<Self> {
        let g = inverse_hazard(&gamma)?;
        Ok(Self {
            g,
            gamma,
            linked: true,
        })
    }

    /// True when `gamma = R(g)` holds by construction.
    pub fn linked(&self) -> bool {
        self.linked
    }

    /// `|int gamma^2 - int g^2|`.
    pub fn isometry_gap(&self) -> Result<f64> {
        let lhs = cumulative_variance(&self.gamma, 1.0)?;
        let rhs = self.g.second_moment()?;
        Ok((lhs - rhs).abs())
    }
}
