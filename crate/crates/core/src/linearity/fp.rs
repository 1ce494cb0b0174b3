use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};
use crate::quad::{integrate, Estimate, QuadOptions};
use crate::roots::{scan_roots, RootSet};
use crate::specfun::{dawson_unchecked, ln_gamma, norm_pdf};

/// Scan step used by [`fp_roots`].
pub const FP_SCAN_STEP: f64 = 0.05;
/// Central-difference step used by [`fp_ode_residual`].
pub const FP_ODE_STEP: f64 = 1e-3;

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be positive and finite, got {p}")));
    }
    Ok(())
}

// ∫₀^X x^{p-1} e^{-s x²} sin(wx) dx with panels at multiples of π/|w|.
fn sine_moment(w: f64, p: f64, s: f64) -> Result<Estimate<f64>> {
    let upper = ((p.max(1.0) * 40.0 + 80.0) / s).sqrt();
    let mut breaks = Vec::new();
    if w != 0.0 {
        let step = PI / w.abs();
        let n = (upper / step).floor() as usize;
        breaks.extend((1..=n.min(20_000)).map(|k| k as f64 * step));
    }
    let mode = ((p - 1.0).max(0.0) / (2.0 * s)).sqrt();
    breaks.extend([mode, 1e-3, 1e-6]);
    let f = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        ((p - 1.0) * x.ln() - s * x * x).exp() * (w * x).sin()
    };
    integrate(f, 0.0, upper, &breaks, QuadOptions::scaled(1e-13, 1e-15))
}

/// `f_p(w) = ∫₀^∞ x^{p-1} e^{-x²} sin(wx) dx` with its error estimate.
pub fn fp_estimate(w: f64, p: f64) -> Result<Estimate<f64>> {
    check_p(p)?;
    ensure_finite("w", w)?;
    sine_moment(w, p, 1.0)
}

/// `f_p(w) = ∫₀^∞ x^{p-1} e^{-x²} sin(wx) dx`.
pub fn fp(w: f64, p: f64) -> Result<f64> {
    Ok(fp_estimate(w, p)?.value)
}

/// The Gaussian-weight variant `∫₀^∞ x^{p-1} φ(x) sin(wx) dx`.
///
/// Related to [`fp`] by `fp_phi(w) = 2^{p/2} (2π)^{-1/2} fp(√2 w)`, so its
/// positive roots are those of `fp` divided by √2.
pub fn fp_phi(w: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    ensure_finite("w", w)?;
    Ok(sine_moment(w, p, 0.5)?.value / (2.0 * PI).sqrt())
}

/// Number of positive roots of `f_p`: `k` for `p ∈ (2k, 2k+2]`.
pub fn expected_root_count(p: f64) -> usize {
    ((p / 2.0).ceil() as usize).saturating_sub(1)
}

fn roots_with<F: Fn(f64) -> Result<Estimate<f64>>>(f: F, p: f64, w_max: f64, l1: f64) -> Result<RootSet> {
    check_p(p)?;
    if !(w_max > FP_SCAN_STEP && w_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("w_max must exceed the scan step, got {w_max}")));
    }
    let value = |w: f64| f(w).map(|e| e.value).unwrap_or(f64::NAN);
    let floor = |w: f64| match f(w) {
        Ok(e) => e.abs_err.max(64.0 * f64::EPSILON * l1),
        Err(_) => f64::INFINITY,
    };
    let rs = scan_roots(&value, FP_SCAN_STEP, w_max, FP_SCAN_STEP, &floor);
    let k = expected_root_count(p);
    if rs.len() != k {
        return Err(Error::Numerical(format!(
            "found {} positive roots of f_p for p = {p} on (0, {w_max}], expected {k}",
            rs.len()
        )));
    }
    Ok(rs)
}

/// Positive roots of `f_p` on `(0, w_max]`. The count must match
/// [`expected_root_count`].
pub fn fp_roots(p: f64, w_max: f64) -> Result<RootSet> {
    let l1 = (ln_gamma(0.5 * p)).exp() / 2.0;
    roots_with(|w| fp_estimate(w, p), p, w_max, l1)
}

/// Positive roots of [`fp_phi`] on `(0, w_max]`.
pub fn fp_roots_phi(p: f64, w_max: f64) -> Result<RootSet> {
    let l1 = (ln_gamma(0.5 * p) + (0.5 * p - 1.0) * 2f64.ln()).exp() / (2.0 * PI).sqrt();
    let scale = 1.0 / (2.0 * PI).sqrt();
    roots_with(
        |w| {
            check_p(p)?;
            let e = sine_moment(w, p, 0.5)?;
            Ok(Estimate {
                value: e.value * scale,
                abs_err: e.abs_err * scale,
                l1: e.l1 * scale,
                converged: e.converged,
            })
        },
        p,
        w_max,
        l1,
    )
}

/// `max_w |2f″ + (p-1)f + (wf)′|` with central differences of step `h`.
pub fn ode_residual_fd<F: Fn(f64) -> Result<f64>>(f: F, p: f64, ws: &[f64], h: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &w in ws {
        let (fm, f0, fpl) = (f(w - h)?, f(w)?, f(w + h)?);
        let d1 = (fpl - fm) / (2.0 * h);
        let d2 = (fpl - 2.0 * f0 + fm) / (h * h);
        let r = 2.0 * d2 + (p - 1.0) * f0 + (f0 + w * d1);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// ODE residual of [`fp`] over `ws`, derivatives by central differences.
pub fn fp_ode_residual(p: f64, ws: &[f64]) -> Result<f64> {
    check_p(p)?;
    ode_residual_fd(|w| fp(w, p), p, ws, FP_ODE_STEP)
}

/// `f₂` and its first two derivatives in closed form:
/// `f₂(w) = (√π/4) w e^{-w²/4}`.
pub fn fp2_closed_form(w: f64) -> (f64, f64, f64) {
    let c = PI.sqrt() / 4.0;
    let e = (-w * w / 4.0).exp();
    let f = c * w * e;
    let d1 = c * e * (1.0 - w * w / 2.0);
    let d2 = c * e * (w * w * w / 4.0 - 1.5 * w);
    (f, d1, d2)
}

/// Principal-value style representation for `p ∈ (0, 2)`:
/// `I(w) = ∫₀^∞ t^{-p} [e^{-(w-t)²/4} - e^{-(w+t)²/4}] dt`.
pub fn pv_integral(w: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::InvalidArgument(format!("representation holds for p in (0, 2), got {p}")));
    }
    ensure_finite("w", w)?;
    // e^{-(w-t)²/4} - e^{-(w+t)²/4} = 2 e^{-(w²+t²)/4} sinh(wt/2)
    let g = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let arg = w * t / 2.0;
        let core = -(w * w + t * t) / 4.0 - p * t.ln();
        if arg.abs() > 20.0 {
            arg.signum() * ((core + arg.abs()).exp() - (core - arg.abs()).exp())
        } else {
            2.0 * core.exp() * arg.sinh()
        }
    };
    let upper = w.abs() + 60.0;
    let breaks = [1e-8, 1e-4, 1e-2, 0.5, w.abs(), w.abs() + 10.0];
    Ok(integrate(g, 0.0, upper, &breaks, QuadOptions::scaled(1e-12, 1e-14))?.value)
}

/// Shape agreement of `f_p` with the representation `c_p · I(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PvCheck {
    pub p: f64,
    /// Constant fitted at the first `w`.
    pub c_p: f64,
    pub ws: Vec<f64>,
    pub fp: Vec<f64>,
    pub pv: Vec<f64>,
    /// `max |f_p - c_p I| / max |f_p|`.
    pub max_rel_dev: f64,
}

/// Fit `c_p` at `ws[0]` and compare shapes over `ws`.
pub fn fp_pv_check(p: f64, ws: &[f64]) -> Result<PvCheck> {
    if ws.is_empty() {
        return Err(Error::InvalidArgument("need at least one w".into()));
    }
    let f: Vec<f64> = ws.iter().map(|&w| fp(w, p)).collect::<Result<_>>()?;
    let i: Vec<f64> = ws.iter().map(|&w| pv_integral(w, p)).collect::<Result<_>>()?;
    if i[0] == 0.0 {
        return Err(Error::InvalidArgument("cannot fit c_p where the representation vanishes".into()));
    }
    let c_p = f[0] / i[0];
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dev = f.iter().zip(&i).fold(0.0f64, |m, (a, b)| m.max((a - c_p * b).abs()));
    Ok(PvCheck { p, c_p, ws: ws.to_vec(), fp: f, pv: i, max_rel_dev: dev / scale.max(f64::MIN_POSITIVE) })
}

/// Result of comparing the Fourier transform of `sign(x)φ(x)` with the
/// Dawson function.
#[derive(Debug, Clone, PartialEq)]
pub struct DawsonCheck {
    pub ws: Vec<f64>,
    /// `Im ∫ sign(x)φ(x) e^{jωx} dx` by quadrature.
    pub quadrature: Vec<f64>,
    /// `(2/√π) D(ω/√2)`.
    pub closed_form: Vec<f64>,
    pub max_deviation: f64,
}

/// Compare `2∫₀^∞ φ(x) sin(ωx) dx` with `(2/√π) D(ω/√2)` over `ws`.
pub fn dawson_fourier_check(ws: &[f64]) -> Result<DawsonCheck> {
    let mut quad = Vec::with_capacity(ws.len());
    let mut closed = Vec::with_capacity(ws.len());
    for &w in ws {
        ensure_finite("omega", w)?;
        let upper = 40.0;
        let mut breaks = Vec::new();
        if w != 0.0 {
            let step = PI / w.abs();
            let n = (upper / step).floor() as usize;
            breaks.extend((1..=n).map(|k| k as f64 * step));
        }
        let e =
            integrate(|x: f64| norm_pdf(x) * (w * x).sin(), 0.0, upper, &breaks, QuadOptions::scaled(1e-14, 1e-15))?;
        quad.push(2.0 * e.value);
        closed.push(2.0 / PI.sqrt() * dawson_unchecked(w / std::f64::consts::SQRT_2));
    }
    let max_deviation = quad.iter().zip(&closed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(DawsonCheck { ws: ws.to_vec(), quadrature: quad, closed_form: closed, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::specfun::hermite_zeros;

    // Kummer series: f_p(w) = (w/2) Γ((p+1)/2) ₁F₁((p+1)/2; 3/2; -w²/4).
    fn kummer(w: f64, p: f64) -> f64 {
        let a = 0.5 * (p + 1.0);
        let z = -w * w / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..400 {
            let nf = n as f64;
            term *= (a + nf) / (1.5 + nf) * z / (nf + 1.0);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        0.5 * w * ln_gamma(a).exp() * sum
    }

    #[test]
    fn against_kummer_series() {
        for &p in &[0.5, 1.0, 2.0, 2.5, 4.0, 7.0] {
            for &w in &[0.1, 0.7, 1.5, 2.449, 4.0] {
                let f = fp(w, p).unwrap();
                assert!((f - kummer(w, p)).abs() < 1e-12, "p={p} w={w}");
            }
        }
    }

    #[test]
    fn special_cases() {
        for &w in &[0.3, 1.0, 3.0, 12.0] {
            assert!((fp(w, 1.0).unwrap() - dawson_unchecked(w / 2.0)).abs() < 1e-13);
            assert!((fp(w, 2.0).unwrap() - fp2_closed_form(w).0).abs() < 1e-13);
            let f4 = PI.sqrt() / 16.0 * (6.0 * w - w * w * w) * (-w * w / 4.0).exp();
            assert!((fp(w, 4.0).unwrap() - f4).abs() < 1e-13);
        }
        assert_eq!(fp(0.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn root_counts_and_values() {
        let r = fp_roots(4.0, 20.0).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.roots[0] - 6f64.sqrt()).abs() < 1e-8);
        assert!(fp_roots(1.5, 20.0).unwrap().is_empty());
        assert_eq!(fp_roots(7.0, 20.0).unwrap().len(), 3);
        assert_eq!(expected_root_count(2.0), 0);
        assert_eq!(expected_root_count(2.5), 1);
        assert_eq!(expected_root_count(8.0), 3);
    }

    #[test]
    fn phi_convention_roots_are_hermite_zeros() {
        let r = fp_roots_phi(4.0, 20.0).unwrap();
        assert!((r.roots[0] - 3f64.sqrt()).abs() < 1e-8);
        let he = hermite_zeros(5).unwrap();
        let r = fp_roots_phi(6.0, 20.0).unwrap();
        for (a, b) in r.roots.iter().zip(he.roots.iter().filter(|z| **z > 0.0)) {
            assert!((a - b).abs() < 1e-8);
        }
        for &w in &[0.4, 1.3, 2.0] {
            let p: f64 = 3.0;
            let bridge = 2f64.powf(p / 2.0) / (2.0 * PI).sqrt() * fp(2f64.sqrt() * w, p).unwrap();
            assert!((fp_phi(w, p).unwrap() - bridge).abs() < 1e-13);
        }
    }

    #[test]
    fn ode_residuals() {
        let ws = linspace(0.5, 5.0, 46);
        for p in [1.0, 2.5, 4.0] {
            assert!(fp_ode_residual(p, &ws).unwrap() <= 1e-5, "p={p}");
        }
        let analytic = ws
            .iter()
            .map(|&w| {
                let (f, d1, d2) = fp2_closed_form(w);
                (2.0 * d2 + f + f + w * d1).abs()
            })
            .fold(0.0, f64::max);
        assert!(analytic <= 1e-15);
    }

    #[test]
    fn dawson_identity() {
        let ws: Vec<f64> = linspace(0.25, 8.0, 32);
        assert!(dawson_fourier_check(&ws).unwrap().max_deviation <= 1e-8);
        let z = dawson_fourier_check(&[0.0]).unwrap();
        assert_eq!(z.quadrature[0], 0.0);
        assert_eq!(z.closed_form[0], 0.0);
        let big = dawson_fourier_check(&[20.0]).unwrap();
        assert!(big.quadrature[0].abs() <= 0.06 && big.closed_form[0].abs() <= 0.06);
        assert!(big.max_deviation <= 1e-8);
    }

    #[test]
    fn pv_shape() {
        let ws = [0.3, 0.8, 1.5, 2.5, 4.0, 6.0];
        for p in [0.5, 1.0, 1.5] {
            let c = fp_pv_check(p, &ws).unwrap();
            assert!(c.max_rel_dev < 1e-9, "p={p}: {}", c.max_rel_dev);
            assert!(c.pv.iter().all(|v| *v > 0.0));
        }
        let c = fp_pv_check(1.0, &ws).unwrap();
        assert!((c.c_p - 0.5 / PI.sqrt()).abs() < 1e-10);
    }
}
