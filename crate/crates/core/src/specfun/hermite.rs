use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::roots::RootSet;

/// Largest supported Hermite degree.
pub const HERMITE_MAX_DEGREE: usize = 50;

/// Polynomial coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    pub coeffs: Vec<f64>,
}

impl PolyCoeffs {
    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n > HERMITE_MAX_DEGREE {
        return Err(Error::Domain(format!("Hermite degree {n} exceeds {HERMITE_MAX_DEGREE}")));
    }
    Ok(())
}

/// Coefficients of the probabilists' Hermite polynomial `He_n`.
pub fn hermite_prob(n: usize) -> Result<PolyCoeffs> {
    check_degree(n)?;
    let mut prev = vec![1.0];
    if n == 0 {
        return Ok(PolyCoeffs { coeffs: prev });
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    Ok(PolyCoeffs { coeffs: cur })
}

/// `(He_n(x), He_{n-1}(x))` by the three-term recurrence.
pub fn hermite_eval(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let p2 = x * p1 - k as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Zeros of `He_n`, sorted, with sign-change brackets.
///
/// Eigenvalues of the symmetric Jacobi matrix, then Newton polishing on
/// the recurrence.
pub fn hermite_zeros(n: usize) -> Result<RootSet> {
    check_degree(n)?;
    if n == 0 {
        return Ok(RootSet::default());
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let mut zeros: Vec<f64> = SymmetricEigen::new(j).eigenvalues.iter().copied().collect();
    zeros.sort_by(f64::total_cmp);
    for z in zeros.iter_mut() {
        for _ in 0..3 {
            let (p, q) = hermite_eval(n, *z);
            let d = n as f64 * q;
            if d == 0.0 {
                break;
            }
            let step = p / d;
            *z -= step;
            if step.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
    }
    // Exact symmetry: zeros come in ± pairs, with 0 for odd n.
    for i in 0..n / 2 {
        let m = 0.5 * (zeros[n - 1 - i] - zeros[i]);
        zeros[i] = -m;
        zeros[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        zeros[n / 2] = 0.0;
    }
    let mut out = RootSet::default();
    for &z in &zeros {
        let mut delta = 1e-9 * z.abs().max(1.0);
        let mut bracket = (z, z);
        for _ in 0..20 {
            let lo = z - delta;
            let hi = z + delta;
            if hermite_eval(n, lo).0 * hermite_eval(n, hi).0 < 0.0 {
                bracket = (lo, hi);
                break;
            }
            delta *= 4.0;
        }
        if bracket.0 == bracket.1 {
            return Err(Error::Numerical(format!("no sign change around Hermite zero {z} (n = {n})")));
        }
        out.roots.push(z);
        out.brackets.push(bracket);
        out.residuals.push(hermite_eval(n, z).0.abs());
    }
    Ok(out)
}
