//! Tangent directions `g` of the uniform base law on `[0, 1]`.
//!
//! A tangent is bounded and centered; it defines the path of densities
//! `1 + theta * g`. Built-in tangents carry closed forms for their
//! antiderivative and tail mean so that hazard quantities can be evaluated
//! without quadrature.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result, TangentConstraint};
use crate::quadrature::{integrate, DEFAULT_TOL};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Points used for the bound spot-check.
pub const VALIDATION_GRID: usize = 1024;

/// Closed forms shipped with a tangent.
#[derive(Clone)]
pub struct TangentClosedForm {
    /// `x -> int_0^x g(u) du`
    pub antiderivative: RealFn,
    /// `x -> int_x^1 g(u) du / (1 - x)`, with its left limit at `x = 1`.
    pub tail_mean: RealFn,
}

#[derive(Clone)]
pub struct TangentFunction {
    label: String,
    bound: f64,
    eval: RealFn,
    closed_form: Option<TangentClosedForm>,
    second_moment: Arc<OnceLock<f64>>,
}

impl fmt::Debug for TangentFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TangentFunction")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .field("closed_form", &self.closed_form.is_some())
            .finish()
    }
}

impl TangentFunction {
    pub fn new<F>(label: impl Into<String>, bound: f64, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            bound,
            eval: Arc::new(eval),
            closed_form: None,
            second_moment: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_closed_form(mut self, closed_form: TangentClosedForm) -> Self {
        self.closed_form = Some(closed_form);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn eval_fn(&self) -> RealFn {
        self.eval.clone()
    }

    pub fn closed_form(&self) -> Option<&TangentClosedForm> {
        self.closed_form.as_ref()
    }

    pub fn mean(&self) -> Result<f64> {
        integrate(|x| self.eval(x), 0.0, 1.0, DEFAULT_TOL)
    }

    /// `int g^2 dP_0`, cached after the first call.
    pub fn second_moment(&self) -> Result<f64> {
        if let Some(v) = self.second_moment.get() {
            return Ok(*v);
        }
        let v = integrate(|x| self.eval(x).powi(2), 0.0, 1.0, DEFAULT_TOL)?;
        Ok(*self.second_moment.get_or_init(|| v))
    }

    /// `int_0^x g`, closed form when available.
    pub fn antiderivative(&self, x: f64) -> Result<f64> {
        match &self.closed_form {
            Some(cf) => Ok((cf.antiderivative)(x)),
            None => integrate(|u| self.eval(u), 0.0, x, DEFAULT_TOL),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentReport {
    pub mean: f64,
    pub max_abs: f64,
    pub bound: f64,
    pub second_moment: f64,
}

/// Check the tangent-space constraints: centered within `tol`, bounded on a
/// 1024-point grid, finite second moment.
pub fn validate_tangent(g: &TangentFunction, tol: f64) -> Result<TangentReport> {
    let max_abs = (0..VALIDATION_GRID)
        .map(|k| g.eval(k as f64 / (VALIDATION_GRID - 1) as f64).abs())
        .fold(
            0.0f64,
            |acc, v| if v.is_nan() { f64::NAN } else { acc.max(v) },
        );
    if !max_abs.is_finite() {
        return Err(Error::InvalidTangent {
            label: g.label.clone(),
            constraint: TangentConstraint::Finite,
            detail: "non-finite value on the validation grid".into(),
        });
    }
    if max_abs > g.bound {
        return Err(Error::InvalidTangent {
            label: g.label.clone(),
            constraint: TangentConstraint::Bound,
            detail: format!("grid max |g| = {max_abs} exceeds bound {}", g.bound),
        });
    }
    let mean = g.mean()?;
    if mean.abs() > tol {
        return Err(Error::InvalidTangent {
            label: g.label.clone(),
            constraint: TangentConstraint::MeanZero,
            detail: format!("int g dP_0 = {mean}"),
        });
    }
    let second_moment = g.second_moment()?;
    Ok(TangentReport {
        mean,
        max_abs,
        bound: g.bound,
        second_moment,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    /// Raised when the matrix is not of full rank.
    pub rank_deficient: bool,
}

/// `sigma_ij = int g_i g_j dP_0`, mirrored so the result is exactly symmetric.
pub fn covariance_matrix(gs: &[TangentFunction], tol: f64) -> Result<CovarianceReport> {
    for g in gs {
        validate_tangent(g, 1e-8)?;
    }
    let d = gs.len();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = if i == j {
                gs[i].second_moment()?
            } else {
                integrate(|x| gs[i].eval(x) * gs[j].eval(x), 0.0, 1.0, tol)?
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let rank = pivoted_rank(&m, 1e-9);
    Ok(CovarianceReport {
        rank_deficient: rank < d,
        matrix: m,
        rank,
    })
}

/// Rank from a diagonally pivoted Cholesky factorization of a PSD matrix.
fn pivoted_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let d = m.nrows();
    let mut a = m.clone();
    let scale = (0..d).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    let mut remaining: Vec<usize> = (0..d).collect();
    while !remaining.is_empty() {
        let (pos, &p) = remaining
            .iter()
            .enumerate()
            .max_by(|x, y| a[(*x.1, *x.1)].total_cmp(&a[(*y.1, *y.1)]))
            .expect("nonempty");
        let pivot = a[(p, p)];
        if pivot <= rel_tol * scale {
            break;
        }
        rank += 1;
        remaining.swap_remove(pos);
        for &i in &remaining {
            for &j in &remaining {
                a[(i, j)] -= a[(i, p)] * a[(p, j)] / pivot;
            }
        }
    }
    rank
}

/// `g(x) = 1 - 2x`, hazard derivative `1 - x`.
pub fn linear() -> TangentFunction {
    TangentFunction::new("linear", 1.0, |x| 1.0 - 2.0 * x).with_closed_form(TangentClosedForm {
        antiderivative: Arc::new(|x| x - x * x),
        // (1 - x) - (1 - x^2) over (1 - x)
        tail_mean: Arc::new(|x| -x),
    })
}

/// `g(x) = x - 1/2`, hazard derivative `(x - 1)/2`.
pub fn centered() -> TangentFunction {
    TangentFunction::new("centered", 0.5, |x| x - 0.5).with_closed_form(TangentClosedForm {
        antiderivative: Arc::new(|x| 0.5 * x * x - 0.5 * x),
        tail_mean: Arc::new(|x| 0.5 * x),
    })
}

/// `g(x) = cos(2 pi x)`.
pub fn cosine() -> TangentFunction {
    use std::f64::consts::PI;
    TangentFunction::new("cosine", 1.0, |x| (2.0 * PI * x).cos()).with_closed_form(
        TangentClosedForm {
            antiderivative: Arc::new(|x| (2.0 * PI * x).sin() / (2.0 * PI)),
            tail_mean: Arc::new(|x| {
                let h = 1.0 - x;
                if h < 1e-4 {
                    // sin(2 pi h) / (2 pi h) by its Taylor series
                    let z = 2.0 * PI * h;
                    1.0 - z * z / 6.0 + z.powi(4) / 120.0
                } else {
                    (2.0 * PI * h).sin() / (2.0 * PI * h)
                }
            }),
        },
    )
}

/// `g = 0`.
pub fn zero() -> TangentFunction {
    TangentFunction::new("zero", 0.0, |_| 0.0).with_closed_form(TangentClosedForm {
        antiderivative: Arc::new(|_| 0.0),
        tail_mean: Arc::new(|_| 0.0),
    })
}

pub fn builtin(name: &str) -> Option<TangentFunction> {
    match name {
        "linear" => Some(linear()),
        "centered" => Some(centered()),
        "cosine" => Some(cosine()),
        "zero" => Some(zero()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["linear", "centered", "cosine", "zero"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub formula: &'static str,
    pub hazard_formula: &'static str,
    pub bound: f64,
    pub second_moment: f64,
    pub closed_form: bool,
}

pub fn list_builtin_tangents() -> Vec<CatalogEntry> {
    let formulas = [
        ("1 - 2x", "1 - x"),
        ("x - 1/2", "(x - 1)/2"),
        ("cos(2 pi x)", "cos(2 pi x) + sin(2 pi x)/(2 pi (1 - x))"),
        ("0", "0"),
    ];
    BUILTIN_NAMES
        .iter()
        .zip(formulas)
        .map(|(name, (formula, hazard_formula))| {
            let g = builtin(name).expect("builtin");
            CatalogEntry {
                name: name.to_string(),
                formula,
                hazard_formula,
                bound: g.bound(),
                second_moment: g.second_moment().expect("smooth builtin"),
                closed_form: g.closed_form().is_some(),
            }
        })
        .collect()
}
