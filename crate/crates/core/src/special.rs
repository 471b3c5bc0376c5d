//! Modified Bessel function of the second kind for real order.
//!
//! `K_nu(x)` is evaluated from the integral representation
//!
//! ```text
//! K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt
//! ```
//!
//! with the trapezoidal rule. The integrand is an even entire function of
//! `t` that decays double exponentially, so the rule converges
//! geometrically in the step size. All accumulation is done in log space,
//! which keeps `K_nu` usable for orders in the thousands where the value
//! itself overflows.

use crate::error::{Error, Result};

const MAX_NODES: usize = 4_000_000;
/// Terms more than this many e-folds below the running maximum are dropped.
const LOG_CUTOFF: f64 = 50.0;

/// `ln cosh(a)` for `a >= 0` without overflow.
fn ln_cosh(a: f64) -> f64 {
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Natural logarithm of `K_nu(x)` for `x > 0`. `K` is even in `nu`.
pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !nu.is_finite() {
        return Err(Error::Parameter(format!("Bessel order must be finite, got {nu}")));
    }
    let nu = nu.abs();
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Parameter(format!("Bessel argument must be finite and > 0, got {x}")));
    }
    let log_integrand = |t: f64| -x * t.cosh() + ln_cosh(nu * t);

    // The integrand peaks near sinh(t) = nu / x with curvature of order
    // sqrt(nu^2 + x^2); the step resolves that width.
    let peak = (nu / x).asinh();
    let width = (nu * nu + x * x).sqrt().sqrt().recip();
    let h = (width / 3.0).min(0.1);

    let mut terms = Vec::with_capacity(1024);
    let mut max = f64::NEG_INFINITY;
    let mut k = 0usize;
    loop {
        let t = k as f64 * h;
        let mut g = log_integrand(t);
        if k == 0 {
            g -= std::f64::consts::LN_2;
        }
        if !g.is_nan() {
            max = max.max(g);
            terms.push(g);
        }
        if t > peak && (g < max - LOG_CUTOFF || g == f64::NEG_INFINITY) {
            break;
        }
        k += 1;
        if k > MAX_NODES {
            return Err(Error::Evaluation(format!(
                "K_{nu}({x}) quadrature did not terminate"
            )));
        }
    }
    if !max.is_finite() {
        return Err(Error::Evaluation(format!("K_{nu}({x}) underflowed")));
    }
    let sum: f64 = terms.iter().map(|g| (g - max).exp()).sum();
    let value = max + sum.ln() + h.ln();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation(format!("K_{nu}({x}) is not finite")))
    }
}

/// `K_nu(x)`; fails when the value is not representable.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    let v = ln_bessel_k(nu, x)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation(format!("K_{nu}({x}) overflows")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_integer_orders_match_elementary_forms() {
        for &x in &[1e-4, 0.01, 0.3, 1.0, 2.5, 10.0, 40.0] {
            let base = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!(rel(bessel_k(0.5, x).unwrap(), base) < 1e-13, "x={x}");
            assert!(rel(bessel_k(1.5, x).unwrap(), base * (1.0 + 1.0 / x)) < 1e-13);
            let k52 = base * (1.0 + 3.0 / x + 3.0 / (x * x));
            assert!(rel(bessel_k(2.5, x).unwrap(), k52) < 1e-13);
        }
    }

    #[test]
    fn integer_orders_match_tabulated_values() {
        assert!(rel(bessel_k(0.0, 1.0).unwrap(), 0.421_024_438_240_708_3) < 1e-13);
        assert!(rel(bessel_k(1.0, 1.0).unwrap(), 0.601_907_230_197_234_6) < 1e-13);
        assert!(rel(bessel_k(0.0, 0.1).unwrap(), 2.427_069_024_702_016_6) < 1e-12);
    }

    #[test]
    fn recurrence_holds_for_fractional_order() {
        // K_{nu+1}(x) = K_{nu-1}(x) + 2 nu / x K_nu(x)
        for &(nu, x) in &[(1.3, 0.7), (2.71, 3.0), (0.9, 0.05)] {
            let lhs = bessel_k(nu + 1.0, x).unwrap();
            let rhs = bessel_k(nu - 1.0, x).unwrap() + 2.0 * nu / x * bessel_k(nu, x).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "nu={nu} x={x}");
        }
    }

    #[test]
    fn huge_order_stays_in_log_space() {
        // Leading term of the small-argument expansion dominates for nu >> x^2.
        let (nu, x) = (1.0e4_f64, 70.0_f64);
        let ln_k = ln_bessel_k(nu, x).unwrap();
        assert!(ln_k.is_finite() && ln_k > 700.0);
        assert!(bessel_k(nu, x).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(ln_bessel_k(-1.3, 0.4).unwrap(), ln_bessel_k(1.3, 0.4).unwrap());
        assert!(ln_bessel_k(f64::INFINITY, 1.0).is_err());
        assert!(ln_bessel_k(1.0, 0.0).is_err());
        assert!(ln_bessel_k(f64::NAN, 1.0).is_err());
    }
}
