use std::f64::consts::{PI, SQRT_2};

use crate::error::{ensure_finite, Result};

/// ln √(2π).
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Density and distribution function of N(0, 1) at `x`.
pub fn std_normal(x: f64) -> Result<(f64, f64)> {
    ensure_finite("x", x)?;
    Ok((norm_pdf(x), norm_cdf(x)))
}

/// Rational approximation of the normal quantile, absolute error < 5e-4.
/// Only used for starting values.
pub fn norm_quantile_approx(p: f64) -> f64 {
    let q = if p < 0.5 { p } else { 1.0 - p };
    let t = (-2.0 * q.ln()).sqrt();
    let z = t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    if p < 0.5 {
        -z
    } else {
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};

    #[test]
    fn value_at_zero() {
        let (pdf, cdf) = std_normal(0.0).unwrap();
        assert!((pdf - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert_eq!(cdf, 0.5);
    }

    #[test]
    fn cdf_against_quadrature() {
        let x = 1.959963985;
        let q = integrate(norm_pdf, -40.0, x, &[0.0], QuadOptions::default()).unwrap().value;
        assert!((norm_cdf(x) - q).abs() < 1e-13);
        assert!((norm_cdf(x) - 0.975).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(std_normal(f64::NAN).is_err());
        assert!(std_normal(f64::INFINITY).is_err());
    }

    #[test]
    fn quantile_approx_is_rough_inverse() {
        for p in [0.01, 0.2, 0.5, 0.7, 0.999] {
            assert!((norm_cdf(norm_quantile_approx(p)) - p).abs() < 1e-3);
        }
    }
}
