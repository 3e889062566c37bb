//! Adaptive composite Simpson quadrature.
//!
//! Intervals are bisected until the Richardson error estimate
//! `|S(left) + S(right) - S(whole)| / 15` falls below the local share of the
//! tolerance. Every integral in the crate (compensators, cumulative
//! variances, tail means, normalizing constants) goes through [`integrate`].

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_depth(f, a, b, tol, MAX_DEPTH)
}

pub fn integrate_with_depth<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidParameter {
            name: "a",
            reason: format!("need a <= b, got [{a}, {b}]"),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("need tol > 0, got {tol}"),
        });
    }
    if a == b {
        return Ok(0.0);
    }

    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);

    let mut state = State {
        worst_error: 0.0,
        converged: true,
    };
    let estimate = refine(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut state);
    if !estimate.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            a,
            b,
            estimate,
            error_estimate: f64::INFINITY,
        });
    }
    if state.converged {
        Ok(estimate)
    } else {
        Err(Error::QuadratureNonConvergence {
            a,
            b,
            estimate,
            error_estimate: state.worst_error,
        })
    }
}

/// Best estimate, even if refinement ran out of depth.
pub fn integrate_lenient<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    match integrate(f, a, b, tol) {
        Ok(v) => v,
        Err(Error::QuadratureNonConvergence { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

struct State {
    worst_error: f64,
    converged: bool,
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut State,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;

    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    // Interval too small to split further in floating point.
    if depth == 0 || !(m > a && m < b) {
        state.converged = false;
        state.worst_error = state.worst_error.max(delta.abs() / 15.0);
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, state)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn odd_about_midpoint_is_zero() {
        let v = integrate(|x| x - 0.5, 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn centered_square_is_one_twelfth() {
        // antiderivative (x - 1/2)^3 / 3 evaluated on [0, 1]
        let oracle = (0.5f64.powi(3) - (-0.5f64).powi(3)) / 3.0;
        let v = integrate(|x| (x - 0.5) * (x - 0.5), 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert!((v - oracle).abs() < 1e-14);
        assert!((oracle - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn full_period_cosine_is_zero() {
        let v = integrate(|x| (2.0 * PI * x).cos(), 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn cubics_are_exact() {
        let v = integrate(
            |x| 4.0 * x * x * x - 3.0 * x * x + 2.0 * x - 1.0,
            0.0,
            1.0,
            1e-10,
        )
        .unwrap();
        // 1 - 1 + 1 - 1
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn kink_is_resolved() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        let oracle = 0.3 * 0.3 / 2.0 + 0.7 * 0.7 / 2.0;
        assert!((v - oracle).abs() < 1e-9);
    }

    #[test]
    fn degenerate_interval() {
        assert_eq!(integrate(|x| x, 0.4, 0.4, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, 1e-10),
            Err(Error::InvalidParameter { name: "a", .. })
        ));
    }

    #[test]
    fn nonconvergence_carries_best_estimate() {
        // 1/sqrt(x) has an integrable singularity that depth 4 cannot resolve.
        let err = integrate_with_depth(|x: f64| 1.0 / x.max(1e-300).sqrt(), 0.0, 1.0, 1e-12, 4)
            .unwrap_err();
        match err {
            Error::QuadratureNonConvergence { estimate, .. } => assert!(estimate.is_finite()),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn cubic_exactness(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, c3 in -5.0f64..5.0) {
            let v = integrate(|x| c0 + c1 * x + c2 * x * x + c3 * x * x * x, 0.0, 1.0, 1e-10).unwrap();
            let oracle = c0 + c1 / 2.0 + c2 / 3.0 + c3 / 4.0;
            proptest::prop_assert!((v - oracle).abs() < 1e-12);
        }
    }
}
