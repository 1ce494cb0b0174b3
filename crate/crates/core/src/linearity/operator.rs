use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::quad::{integrate, QuadOptions, QuadValue};
use crate::specfun::{erf_complex, LN_SQRT_2PI};

use super::sign0;

/// Half-width of the integration window around `y` used by [`apply_ta`].
const TA_WINDOW: f64 = 40.0;

/// `T_a[f](y) = ∫ sign(x - ay) φ(y - x) f(x) dx`.
///
/// Adaptive quadrature on `[y - 40, y + 40]` with the kernel jump at
/// `x = ay` as a panel boundary.
pub fn apply_ta<T, F>(f: F, a: f64, y: f64) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    ensure_finite("a", a)?;
    ensure_finite("y", y)?;
    let cut = a * y;
    let g = |x: f64| f(x) * (sign0(x - cut) * (-0.5 * (y - x) * (y - x) - LN_SQRT_2PI).exp());
    let lo = y - TA_WINDOW;
    let hi = y + TA_WINDOW;
    let mut breaks = vec![cut, y];
    breaks.extend((1..8).map(|k| y + 5.0 * (k as f64 - 4.0)));
    let e = integrate(g, lo.min(cut - 1.0), hi.max(cut + 1.0), &breaks, QuadOptions::scaled(1e-13, 1e-14))?;
    Ok(e.value)
}

/// Gabor atom `e^{-(x-μ)²/(2σ²)} e^{jωx}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    pub mu: f64,
    pub sigma2: f64,
    pub omega: f64,
}

impl GaborParams {
    pub fn b(&self) -> f64 {
        1.0 + 1.0 / self.sigma2
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let d = x - self.mu;
        Complex64::from_polar((-d * d / (2.0 * self.sigma2)).exp(), self.omega * x)
    }

    fn validate(&self) -> Result<()> {
        ensure_finite("mu", self.mu)?;
        ensure_finite("sigma2", self.sigma2)?;
        ensure_finite("omega", self.omega)?;
        if !(self.sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "closed form requires sigma2 > 0 (the integral diverges for sigma2 in (-1, 0)); got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

/// Closed form of `T_a` applied to a Gabor atom:
/// `b^{-1/2} exp(-y²/2 - μ²/(2σ²) + c²/(2b)) erf(((1 - ba)y + μ/σ² + jω)/√(2b))`
/// with `c = y + μ/σ² + jω`.
pub fn gabor_closed_form(params: GaborParams, a: f64, y: f64) -> Result<Complex64> {
    params.validate()?;
    ensure_finite("a", a)?;
    ensure_finite("y", y)?;
    let b = params.b();
    let k = Complex64::new(params.mu / params.sigma2, params.omega);
    let c = k + y;
    let expo = -0.5 * y * y - params.mu * params.mu / (2.0 * params.sigma2) + c * c / (2.0 * b);
    let arg = ((1.0 - b * a) * y + k) / (2.0 * b).sqrt();
    Ok(expo.exp() * erf_complex(arg)? / b.sqrt())
}

/// The prefactor `c(b, ω, μ)` of the matched case `σ² = a/(1-a)`, where
/// `T_a[f](y) = c · e^{-(1-a)(y-μ)²/2} · e^{jωay}`.
pub fn gabor_matched_prefactor(mu: f64, omega: f64, a: f64) -> Result<Complex64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("a must lie in (0, 1), got {a}")));
    }
    let s2 = a / (1.0 - a);
    let k = Complex64::new(mu / s2, omega);
    let e = erf_complex(k / (2.0 / a).sqrt())?;
    Ok(e * a.sqrt() * (-0.5 * a * omega * omega).exp() * Complex64::from_polar(1.0, omega * mu * (1.0 - a)))
}

/// Matched-case closed form via [`gabor_matched_prefactor`].
pub fn gabor_matched_closed_form(mu: f64, omega: f64, a: f64, y: f64) -> Result<Complex64> {
    let c = gabor_matched_prefactor(mu, omega, a)?;
    let d = y - mu;
    Ok(c * (-(1.0 - a) * d * d / 2.0).exp() * Complex64::from_polar(1.0, omega * a * y))
}

/// Gabor parameters `(μ, ω)` in the matched case whose prefactor vanishes
/// because `(μ/σ² + jω)/√(2/a)` equals the erf zero `z`.
pub fn gabor_null_params(z: Complex64, a: f64) -> Result<GaborParams> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("a must lie in (0, 1), got {a}")));
    }
    let mu = std::f64::consts::SQRT_2 * z.re * a.sqrt() / (1.0 - a);
    let omega = std::f64::consts::SQRT_2 * z.im / a.sqrt();
    Ok(GaborParams { mu, sigma2: a / (1.0 - a), omega })
}
