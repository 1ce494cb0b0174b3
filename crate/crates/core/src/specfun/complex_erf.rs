use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Half-width of the square `|Re z|, |Im z| ≤ ERF_DOMAIN` on which
/// [`erf_complex`] is supported.
pub const ERF_DOMAIN: f64 = 30.0;

/// Complex error function.
///
/// Uses an exponentially convergent series in the first quadrant and the
/// reflection identities elsewhere. Points where the true value overflows `f64` are reported as domain errors.
pub fn erf_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite argument {z}")));
    }
    if z.re.abs() > ERF_DOMAIN || z.im.abs() > ERF_DOMAIN {
        return Err(Error::Domain(format!("erf argument {z} outside |Re|,|Im| <= {ERF_DOMAIN}")));
    }
    let w = first_quadrant(z.re.abs(), z.im.abs());
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::Domain(format!("erf({z}) overflows")));
    }
    let w = if z.im < 0.0 { w.conj() } else { w };
    Ok(if z.re < 0.0 { -w.conj() } else { w })
}

fn first_quadrant(x: f64, y: f64) -> Complex64 {
    let x2 = x * x;
    let (s2, c2) = (2.0 * x * y).sin_cos();
    let mut re = libm::erf(x);
    let mut im = 0.0;
    if x > 0.0 {
        let e = (-x2).exp() / (2.0 * PI * x);
        let sxy = (x * y).sin();
        re += e * 2.0 * sxy * sxy;
        im += e * s2;
    } else {
        im += y / PI;
    }
    let mut sr = 0.0;
    let mut si = 0.0;
    let mut n = 1u32;
    loop {
        let nf = n as f64;
        let base = -x2 - 0.25 * nf * nf;
        let ep = (base + nf * y).exp();
        let em = (base - nf * y).exp();
        let ch = 0.5 * (ep + em);
        let sh = 0.5 * (ep - em);
        let denom = nf * nf + 4.0 * x2;
        let en = (-x2 - 0.25 * nf * nf).exp();
        let fr = (2.0 * x * en - 2.0 * x * ch * c2 + nf * sh * s2) / denom;
        let gi = (2.0 * x * ch * s2 + nf * sh * c2) / denom;
        sr += fr;
        si += gi;
        let mag = fr.abs() + gi.abs();
        if nf > 2.0 * y + 1.0 && mag <= 1e-17 * (sr.abs() + si.abs() + re.abs() + im.abs()) {
            break;
        }
        if n > 400 {
            break;
        }
        n += 1;
    }
    re += 2.0 / PI * sr;
    im += 2.0 / PI * si;
    Complex64::new(re, im)
}

/// `d/dz erf(z) = (2/√π) e^{-z²}`.
pub fn erf_complex_derivative(z: Complex64) -> Complex64 {
    (-z * z).exp() * (2.0 / PI.sqrt())
}

/// Newton-polish an approximate zero of erf.
pub fn refine_erf_zero(z0: Complex64) -> Result<Complex64> {
    let mut z = z0;
    for _ in 0..50 {
        let f = erf_complex(z)?;
        let step = f / erf_complex_derivative(z);
        z -= step;
        if step.norm() <= 1e-15 * z.norm() {
            return Ok(z);
        }
    }
    Err(Error::Numerical(format!("Newton iteration for erf zero near {z0} did not converge")))
}
