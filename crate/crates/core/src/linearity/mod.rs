//! Linearity conditions for Bayes estimators under Gaussian noise, the
//! signed-kernel operator `T_a`, and the function `f_p`.

mod fp;
mod operator;

pub use fp::{
    dawson_fourier_check, expected_root_count, fp, fp2_closed_form, fp_estimate, fp_ode_residual, fp_phi, fp_pv_check,
    fp_roots, fp_roots_phi, ode_residual_fd, pv_integral, DawsonCheck, PvCheck, FP_ODE_STEP, FP_SCAN_STEP,
};
pub use operator::{
    apply_ta, gabor_closed_form, gabor_matched_closed_form, gabor_matched_prefactor, gabor_null_params, GaborParams,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::Prior;
use crate::specfun::LN_SQRT_2PI;

/// Default verdict tolerance for residual sup-norms.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Relative tolerance of the convolution/median equivalence check.
pub const EQUIVALENCE_TOL: f64 = 1e-8;
/// Relative envelope size at the window ends for the convolution form.
pub const ENVELOPE_TOL: f64 = 1e-12;

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Residuals of a linearity condition over a grid of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    pub a: f64,
    pub p: f64,
    pub ys: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sup_norm: f64,
    pub verdict: bool,
    pub tolerance: f64,
}

impl LinearityReport {
    pub fn new(a: f64, p: f64, ys: Vec<f64>, residuals: Vec<f64>, tolerance: f64) -> Self {
        let sup_norm = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        Self { a, p, ys, residuals, sup_norm, verdict: sup_norm <= tolerance, tolerance }
    }

    /// Re-judge with another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.verdict = self.sup_norm <= tolerance;
        self
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("slope must lie in [0, 1), got {a}")));
    }
    Ok(())
}

/// `∫ sign(x - ay)|x - ay|^{p-1} φ(y - x) dP(x)` at one `y`.
pub fn lp_residual_at(prior: &Prior, a: f64, p: f64, y: f64) -> Result<f64> {
    let t = a * y;
    let g = move |x: f64| {
        let d = x - t;
        let k = (-0.5 * (y - x) * (y - x) - LN_SQRT_2PI).exp();
        if p == 1.0 {
            sign0(d) * k
        } else {
            sign0(d) * d.abs().powf(p - 1.0) * k
        }
    };
    prior.integrate_with(g, &[t, y])
}

fn report(prior: &Prior, a: f64, p: f64, ys: &[f64]) -> Result<LinearityReport> {
    check_a(a)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("loss exponent must be >= 1, got {p}")));
    }
    let res = ys.par_iter().map(|&y| lp_residual_at(prior, a, p, y)).collect::<Result<Vec<_>>>()?;
    Ok(LinearityReport::new(a, p, ys.to_vec(), res, DEFAULT_TOLERANCE))
}

/// Residual of the median linearity condition
/// `∫ sign(x - ay) φ(y - x) dP(x) = 0` on the grid `ys`.
pub fn median_linearity_residual(prior: &Prior, a: f64, ys: &[f64]) -> Result<LinearityReport> {
    report(prior, a, 1.0, ys)
}

/// Residual of the L^p linearity condition
/// `∫ sign(x - ay)|x - ay|^{p-1} φ(y - x) dP(x) = 0` on the grid `ys`.
pub fn lp_linearity_residual(prior: &Prior, a: f64, p: f64, ys: &[f64]) -> Result<LinearityReport> {
    report(prior, a, p, ys)
}

// ln of the convolution-form integrand magnitude, without the prior density:
// ln[φ(v - x/√a) e^{(1-a)x²/(2a)}].
fn conv_log_kernel(a: f64, v: f64, x: f64) -> f64 {
    let d = v - x / a.sqrt();
    -0.5 * d * d + (1.0 - a) * x * x / (2.0 * a) - LN_SQRT_2PI
}

fn check_envelope(prior: &Prior, a: f64, v: f64) -> Result<()> {
    if prior.is_atomic() {
        return Ok(());
    }
    let (lo, hi) = prior.effective_support();
    let env = |x: f64| -> f64 {
        match prior.log_density(x) {
            Some(l) if l.is_finite() => l + conv_log_kernel(a, v, x),
            _ => f64::NEG_INFINITY,
        }
    };
    let peak = crate::grid::linspace(lo, hi, 801).into_iter().map(env).fold(f64::NEG_INFINITY, f64::max);
    let edge = env(lo).max(env(hi));
    if !peak.is_finite() || edge - peak > ENVELOPE_TOL.ln() {
        return Err(Error::Domain(format!(
            "rescaled measure does not decay on the prior window at v = {v} (edge/peak = {:.3e})",
            (edge - peak).exp()
        )));
    }
    Ok(())
}

/// The convolution form of the median condition:
/// `C(v) = ∫ sign(u - v) φ(v - u) μ(du)` with
/// `μ(du) = e^{(1-a)u²/2} P_X(√a du)`, evaluated on the grid `vs`.
///
/// Each value is checked against `e^{v²(1-a)/(2a)} R(v/√a)`, where `R` is
/// the median residual, up to `EQUIVALENCE_TOL` times `∫|integrand|`.
pub fn convolution_residual(prior: &Prior, a: f64, vs: &[f64]) -> Result<LinearityReport> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("convolution form needs a in (0, 1), got {a}")));
    }
    let sa = a.sqrt();
    let res = vs
        .par_iter()
        .map(|&v| -> Result<f64> {
            check_envelope(prior, a, v)?;
            let cut = sa * v;
            let c: f64 = prior.integrate_with(|x| sign0(x - cut) * conv_log_kernel(a, v, x).exp(), &[cut])?;
            let l1: f64 = prior.integrate_with(|x| conv_log_kernel(a, v, x).exp(), &[cut])?;
            let r = lp_residual_at(prior, a, 1.0, v / sa)?;
            let scaled = r * (v * v * (1.0 - a) / (2.0 * a)).exp();
            if (c - scaled).abs() > EQUIVALENCE_TOL * l1.max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!(
                    "convolution form {c:e} disagrees with rescaled median residual {scaled:e} at v = {v}"
                )));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearityReport::new(a, 1.0, vs.to_vec(), res, DEFAULT_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::models::{counterexample_prior, matched_gaussian_prior, CounterexampleParams};
    use crate::specfun::{hermite_zeros, norm_pdf};

    #[test]
    fn matched_gaussian_residual_vanishes() {
        let ys = linspace(-5.0, 5.0, 41);
        for a in [0.25, 0.5, 0.75] {
            let r = median_linearity_residual(&matched_gaussian_prior(a).unwrap(), a, &ys).unwrap();
            assert!(r.sup_norm <= 1e-8 && r.verdict, "a={a}: {}", r.sup_norm);
            let r2 = lp_linearity_residual(&matched_gaussian_prior(a).unwrap(), a, 2.0, &ys).unwrap();
            assert!(r2.sup_norm <= 1e-8, "a={a}: {}", r2.sup_norm);
        }
    }

    #[test]
    fn point_mass_at_zero_is_exact() {
        let r = median_linearity_residual(&Prior::point_mass(0.0).unwrap(), 0.0, &[-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(r.sup_norm, 0.0);
    }

    #[test]
    fn two_point_against_closed_form() {
        let prior = Prior::two_point(-1.0, 1.0, 0.5).unwrap();
        let r = median_linearity_residual(&prior, 0.5, &[1.0]).unwrap();
        let y: f64 = 1.0;
        let exact = 0.5 * (norm_pdf(y - 1.0) * sign0(1.0 - y / 2.0) + norm_pdf(y + 1.0) * sign0(-1.0 - y / 2.0));
        assert!((r.residuals[0] - exact).abs() < 1e-15);
        assert!(r.sup_norm > 1e-2 && !r.verdict);
    }

    #[test]
    fn convolution_form_agrees() {
        let vs = linspace(-3.0, 3.0, 13);
        let m = convolution_residual(&matched_gaussian_prior(0.5).unwrap(), 0.5, &vs).unwrap();
        assert!(m.sup_norm <= 1e-7, "{}", m.sup_norm);
        let tp = Prior::two_point(-1.0, 1.0, 0.5).unwrap();
        let c = convolution_residual(&tp, 0.5, &vs).unwrap();
        let r = median_linearity_residual(&tp, 0.5, &vs.iter().map(|v| v / 0.5f64.sqrt()).collect::<Vec<_>>()).unwrap();
        assert_eq!(c.verdict, r.verdict);
        assert!(!c.verdict);
        assert!(convolution_residual(&tp, 0.0, &vs).is_err());
    }

    #[test]
    fn truncated_support_fails_envelope() {
        let flat = Prior::grid(linspace(-1.0, 1.0, 41), vec![1.0; 41]).unwrap();
        assert!(matches!(convolution_residual(&flat, 0.5, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn counterexample_lp_residual() {
        let omega = hermite_zeros(3).unwrap().roots[2];
        let params = CounterexampleParams { a: 0.5, rho: 1.0, theta: 0.0, omega };
        let ys = linspace(-4.0, 4.0, 17);
        let r = lp_linearity_residual(&counterexample_prior(params).unwrap(), 0.5, 4.0, &ys).unwrap();
        assert!(r.sup_norm <= 1e-6, "{}", r.sup_norm);
        let off = CounterexampleParams { omega: omega + 0.3, ..params };
        let r = lp_linearity_residual(&counterexample_prior(off).unwrap(), 0.5, 4.0, &[0.5]).unwrap();
        assert!(r.sup_norm > 1e-3, "{}", r.sup_norm);
    }
}
