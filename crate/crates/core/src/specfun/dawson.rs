use std::f64::consts::PI;

use crate::error::{ensure_finite, Result};

const SERIES_LIMIT: f64 = 0.5;
const ASYMPTOTIC_LIMIT: f64 = 25.0;
const RYBICKI_H: f64 = 0.2;

/// Dawson's integral `D(x) = e^{-x²} ∫₀^x e^{t²} dt`.
pub fn dawson(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(dawson_unchecked(x))
}

/// [`dawson`] without the finiteness check.
pub fn dawson_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        maclaurin(ax)
    } else if ax <= ASYMPTOTIC_LIMIT {
        rybicki(ax)
    } else {
        asymptotic(ax)
    };
    v.copysign(x)
}

// D(x) = Σ (-1)^n 2^n x^{2n+1} / (2n+1)!!
fn maclaurin(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..60 {
        term *= -2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

// Rybicki: D(x) ≈ π^{-1/2} Σ_{n odd} e^{-(x - n h)²} / n, error ~ exp(-(π/2h)²).
fn rybicki(x: f64) -> f64 {
    let h = RYBICKI_H;
    let reach = 7.5;
    let n_lo = ((x - reach) / h).floor() as i64;
    let n_hi = ((x + reach) / h).ceil() as i64;
    let mut sum = 0.0;
    let mut n = if n_lo % 2 == 0 { n_lo + 1 } else { n_lo };
    while n <= n_hi {
        let d = x - n as f64 * h;
        sum += (-d * d).exp() / n as f64;
        n += 2;
    }
    sum / PI.sqrt()
}

// D(x) ~ (1/2x) Σ (2k-1)!! / (2x²)^k
fn asymptotic(x: f64) -> f64 {
    let r = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= (2 * k - 1) as f64 * r;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * x)
}
