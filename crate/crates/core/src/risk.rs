//! Bayes risk `E|X - aY|^p` of linear estimators `aY` with `Y = X + Z`,
//! `Z ~ N(0, 1)`.
//!
//! Quadrature integrates `E_Z|(1-a)x - aZ|^p` against the prior with the
//! inner integral split at its kink. Monte Carlo draws `(X, Z)` pairs from
//! ChaCha8 streams derived from the seed and a chunk index, so results do
//! not depend on the number of threads. A scan reuses the same draws for
//! every slope.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::models::Prior;
use crate::quad::{gauss_legendre, integrate, QuadOptions};
use crate::specfun::norm_pdf;

/// Step of the one-sided difference used by [`risk_derivative`].
pub const DERIVATIVE_STEP: f64 = 1e-4;
/// Draws per Monte Carlo chunk; each chunk owns one generator stream.
pub const MC_CHUNK: usize = 1 << 16;

const INNER_HALF_WIDTH: f64 = 12.0;
const INNER_NODES: usize = 10;
const GRADING_LEVELS: i32 = 40;

/// How a risk value is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskMethod {
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

impl RiskMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RiskMethod::Quadrature => "quadrature",
            RiskMethod::MonteCarlo { .. } => "monte-carlo",
        }
    }
}

/// A risk value with its Monte Carlo standard error, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskValue {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Risks over a grid of slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub a_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub p: f64,
    pub method: RiskMethod,
    pub stderrs: Option<Vec<f64>>,
}

/// Outcome of the tail monotonicity check on a [`RiskCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonotoneTails {
    /// Nondecreasing on `a >= 1`.
    pub above_one: bool,
    /// Nonincreasing on `a <= 0`.
    pub below_zero: bool,
}

impl MonotoneTails {
    pub fn holds(&self) -> bool {
        self.above_one && self.below_zero
    }
}

impl RiskCurve {
    /// Index and slope of the smallest risk (first one on ties).
    pub fn argmin(&self) -> Option<(usize, f64)> {
        let mut best: Option<usize> = None;
        for (i, v) in self.values.iter().enumerate() {
            if best.is_none_or(|b| *v < self.values[b]) {
                best = Some(i);
            }
        }
        best.map(|i| (i, self.a_grid[i]))
    }

    /// Allowed violation when comparing the risks at `i` and `j`.
    fn band(&self, i: usize, j: usize) -> f64 {
        match &self.stderrs {
            Some(se) => 3.0 * (se[i] * se[i] + se[j] * se[j]).sqrt(),
            None => 1e-9 * self.values[i].abs().max(self.values[j].abs()).max(1.0),
        }
    }

    /// Checks that the curve is nondecreasing on `a >= 1` and nonincreasing
    /// on `a <= 0`, up to the MC error band or quadrature tolerance.
    pub fn monotone_tails(&self) -> MonotoneTails {
        let mut above_one = true;
        let mut below_zero = true;
        for i in 1..self.a_grid.len() {
            let (a0, a1) = (self.a_grid[i - 1], self.a_grid[i]);
            let rise = self.values[i] - self.values[i - 1];
            if a0 >= 1.0 && rise < -self.band(i - 1, i) {
                above_one = false;
            }
            if a1 <= 0.0 && rise > self.band(i - 1, i) {
                below_zero = false;
            }
        }
        MonotoneTails { above_one, below_zero }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("loss exponent must be >= 1, got {p}")));
    }
    Ok(())
}

#[inline]
fn abs_pow(d: f64, p: f64) -> f64 {
    let d = d.abs();
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else if p == 4.0 {
        let s = d * d;
        s * s
    } else {
        d.powf(p)
    }
}

/// `E|Z - c|^p` for `Z ~ N(0, 1)` by composite Gauss-Legendre on
/// `[-12, 12]`. Panels have unit width and meet at `c`; for non-integer
/// `p` they are refined geometrically towards `c`.
pub fn shifted_abs_moment(c: f64, p: f64) -> f64 {
    let mut bs: Vec<f64> = (-12..=12).map(|k| k as f64).collect();
    if c.abs() < INNER_HALF_WIDTH {
        bs.push(c);
        if p.fract() != 0.0 {
            for k in 1..=GRADING_LEVELS {
                let d = 0.5f64.powi(k);
                bs.push(c - d);
                bs.push(c + d);
            }
        }
    }
    bs.retain(|b| b.abs() <= INNER_HALF_WIDTH);
    bs.sort_by(f64::total_cmp);
    bs.dedup();
    let rule = gauss_legendre(INNER_NODES);
    let f = |z: f64| abs_pow(z - c, p) * norm_pdf(z);
    bs.windows(2).map(|w| rule.apply(&f, w[0], w[1])).sum()
}

/// `E_Z|(1-a)x - aZ|^p`.
fn inner(x: f64, a: f64, p: f64) -> f64 {
    if a == 0.0 {
        return abs_pow(x, p);
    }
    abs_pow(a, p) * shifted_abs_moment((1.0 - a) * x / a, p)
}

fn risk_quadrature(prior: &Prior, a: f64, p: f64) -> Result<f64> {
    let g = |x: f64| inner(x, a, p);
    let v = match prior {
        Prior::Grid(d) => {
            let pdf = |x: f64| g(x) * d.pdf(x);
            let (lo, hi) = (d.lower(), d.upper());
            let mut bs: Vec<f64> = (1..32).map(|k| lo + (hi - lo) * k as f64 / 32.0).collect();
            bs.push(0.0);
            integrate(pdf, lo, hi, &bs, QuadOptions::scaled(1e-12, 1e-13))?.value
        }
        _ => prior.integrate_with(g, &[0.0])?,
    };
    if !v.is_finite() {
        return Err(Error::Numerical(format!("non-finite risk at a = {a}, p = {p}")));
    }
    Ok(v)
}

// Per-slope running mean and sum of squared deviations over one chunk.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }
}

fn monte_carlo(prior: &Prior, a_grid: &[f64], p: f64, samples: usize, seed: u64) -> Result<Vec<RiskValue>> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("Monte Carlo needs at least 2 samples, got {samples}")));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let per_chunk = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<Moments>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut draws = Vec::with_capacity(n);
            for _ in 0..n {
                let x = prior.sample(&mut rng)?;
                let z: f64 = StandardNormal.sample(&mut rng);
                draws.push((x, z));
            }
            Ok(a_grid
                .iter()
                .map(|&a| {
                    let mut m = Moments::default();
                    for &(x, z) in &draws {
                        m.push(abs_pow((1.0 - a) * x - a * z, p));
                    }
                    m
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![Moments::default(); a_grid.len()];
    for chunk in per_chunk {
        for (t, m) in total.iter_mut().zip(chunk) {
            *t = t.merge(m);
        }
    }
    total
        .into_iter()
        .zip(a_grid)
        .map(|(m, &a)| {
            let se = (m.m2 / (m.n - 1.0) / m.n).sqrt();
            if !m.mean.is_finite() || !se.is_finite() {
                return Err(Error::Numerical(format!("non-finite Monte Carlo risk at a = {a}, p = {p}")));
            }
            Ok(RiskValue { value: m.mean, stderr: Some(se) })
        })
        .collect()
}

/// Bayes risk `E|X - aY|^p` of the estimator `aY`.
pub fn bayes_risk(prior: &Prior, a: f64, p: f64, method: RiskMethod) -> Result<RiskValue> {
    ensure_finite("a", a)?;
    check_p(p)?;
    match method {
        RiskMethod::Quadrature => Ok(RiskValue { value: risk_quadrature(prior, a, p)?, stderr: None }),
        RiskMethod::MonteCarlo { samples, seed } => Ok(monte_carlo(prior, &[a], p, samples, seed)?[0]),
    }
}

/// Risk over a sorted grid of slopes. Monte Carlo scans share one set of
/// draws across all slopes.
pub fn risk_scan(prior: &Prior, p: f64, a_grid: &[f64], method: RiskMethod) -> Result<RiskCurve> {
    check_p(p)?;
    for &a in a_grid {
        ensure_finite("a", a)?;
    }
    if a_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("slope grid must be sorted".into()));
    }
    let (values, stderrs) = match method {
        RiskMethod::Quadrature => {
            let v = a_grid.par_iter().map(|&a| risk_quadrature(prior, a, p)).collect::<Result<Vec<_>>>()?;
            (v, None)
        }
        RiskMethod::MonteCarlo { samples, seed } => {
            let r = monte_carlo(prior, a_grid, p, samples, seed)?;
            (r.iter().map(|v| v.value).collect(), Some(r.iter().map(|v| v.stderr.unwrap_or(0.0)).collect()))
        }
    };
    Ok(RiskCurve { a_grid: a_grid.to_vec(), values, p, method, stderrs })
}

/// One-sided difference `(f(a) - f(a - h)) / h` of the quadrature risk,
/// with `h = DERIVATIVE_STEP`.
pub fn risk_derivative(prior: &Prior, a: f64, p: f64) -> Result<f64> {
    let hi = bayes_risk(prior, a, p, RiskMethod::Quadrature)?.value;
    let lo = bayes_risk(prior, a - DERIVATIVE_STEP, p, RiskMethod::Quadrature)?.value;
    Ok((hi - lo) / DERIVATIVE_STEP)
}
