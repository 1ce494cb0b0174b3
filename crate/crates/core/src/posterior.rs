//! Posterior laws and Bayes estimators.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::linspace;
use crate::models::{GridDensity, NoiseModel, Prior, DEFAULT_GRID_NODES};
use crate::specfun::norm_pdf;

/// Window half-width around the posterior centre, in standard deviations.
const WINDOW_SD: f64 = 8.0;
/// The window is widened until the log density has dropped this far.
const WINDOW_LOG_DROP: f64 = 36.0;
/// Finite-difference step for derivatives of the log marginal.
pub const CUMULANT_STEP: f64 = 1e-2;
/// Maximum allowed disagreement between the two cumulant routes.
pub const CUMULANT_RECONCILE_TOL: f64 = 1e-4;

/// Posterior of `X` given `Y = y`, tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    pub y: f64,
    density: GridDensity,
}

impl PosteriorGrid {
    pub fn grid(&self) -> &[f64] {
        self.density.nodes()
    }

    /// Node density values.
    pub fn density(&self) -> &[f64] {
        self.density.values()
    }

    /// Distribution function at the nodes.
    pub fn cdf(&self) -> &[f64] {
        self.density.node_cdf()
    }

    pub fn as_density(&self) -> &GridDensity {
        &self.density
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.density.pdf(x)
    }
}

/// Posterior of an atomic prior: a finite set of weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomPosterior {
    pub y: f64,
    /// `(location, weight)`, sorted by location, weights summing to one.
    pub atoms: Vec<(f64, f64)>,
}

/// Posterior law.
#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Grid(PosteriorGrid),
    Atoms(AtomPosterior),
}

impl Posterior {
    pub fn y(&self) -> f64 {
        match self {
            Posterior::Grid(g) => g.y,
            Posterior::Atoms(a) => a.y,
        }
    }

    /// `E[g(X) | Y = y]`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, breaks: &[f64]) -> f64 {
        match self {
            Posterior::Grid(p) => p.density.integrate(&g, breaks),
            Posterior::Atoms(p) => p.atoms.iter().map(|(x, w)| w * g(*x)).sum(),
        }
    }

    /// Posterior distribution function.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Posterior::Grid(p) => p.density.cdf(t),
            Posterior::Atoms(p) => p.atoms.iter().filter(|(x, _)| *x <= t).map(|(_, w)| w).sum(),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            Posterior::Grid(p) => (p.density.lower(), p.density.upper()),
            Posterior::Atoms(p) => (p.atoms[0].0, p.atoms[p.atoms.len() - 1].0),
        }
    }
}

fn check_observation(noise: &NoiseModel, y: f64) -> Result<()> {
    if !y.is_finite() {
        return Err(Error::InvalidArgument(format!("observation must be finite, got {y}")));
    }
    if matches!(noise, NoiseModel::Poisson) && (y < 0.0 || y.fract() != 0.0) {
        return Err(Error::Model(format!("Poisson observation must be a nonnegative integer, got {y}")));
    }
    Ok(())
}

fn check_pairing(prior: &Prior, noise: &NoiseModel, y: f64) -> Result<()> {
    if matches!(noise, NoiseModel::Poisson) {
        let lower = match prior {
            Prior::Gaussian { .. } => f64::NEG_INFINITY,
            _ => prior.effective_support().0,
        };
        if lower < 0.0 {
            return Err(Error::Model(format!(
                "Poisson channel needs a prior supported on [0, inf); '{}' prior is not",
                prior.kind()
            )));
        }
    }
    if let Prior::Gamma { shape, .. } = prior {
        let post_shape = if matches!(noise, NoiseModel::Poisson) { shape + y } else { *shape };
        if post_shape < 1.0 {
            return Err(Error::Model(format!(
                "posterior density is unbounded at 0 (effective shape {post_shape} < 1)"
            )));
        }
    }
    Ok(())
}

/// Posterior of `X` given `Y = y` under the given channel.
pub fn posterior(prior: &Prior, noise: &NoiseModel, y: f64) -> Result<Posterior> {
    check_observation(noise, y)?;
    check_pairing(prior, noise, y)?;
    if let Some(atoms) = prior.atoms() {
        let logs: Vec<f64> = atoms.iter().map(|(x, w)| w.ln() + noise.log_likelihood(*x, y)).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::Model(format!("observation {y} has zero likelihood under the prior")));
        }
        let ws: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = ws.iter().sum();
        let mut out: Vec<(f64, f64)> = atoms.iter().zip(ws).map(|((x, _), w)| (*x, w / z)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        return Ok(Posterior::Atoms(AtomPosterior { y, atoms: out }));
    }
    let density = match prior {
        Prior::Grid(g) => {
            let lls: Vec<f64> = g.nodes().iter().map(|&x| noise.log_likelihood(x, y)).collect();
            let m = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !m.is_finite() {
                return Err(Error::Model(format!("observation {y} has zero likelihood on the prior grid")));
            }
            let vals = g.values().iter().zip(&lls).map(|(f, l)| f * (l - m).exp()).collect();
            GridDensity::new(g.nodes().to_vec(), vals)?
        }
        _ => parametric_grid(prior, noise, y)?,
    };
    Ok(Posterior::Grid(PosteriorGrid { y, density }))
}

fn parametric_grid(prior: &Prior, noise: &NoiseModel, y: f64) -> Result<GridDensity> {
    let log_post = |x: f64| -> f64 {
        let lp = prior.log_density(x).unwrap_or(f64::NEG_INFINITY);
        lp + noise.log_likelihood(x, y)
    };
    let lower = prior.support_lower();
    let (centre, sd) = match (prior, noise) {
        (Prior::Gaussian { mean, variance }, NoiseModel::Gaussian) => {
            let v = variance / (1.0 + variance);
            ((mean + variance * y) / (1.0 + variance), v.sqrt())
        }
        (Prior::Gamma { shape, rate }, NoiseModel::Poisson) => {
            let (s, r) = (shape + y, rate + 1.0);
            (s / r, s.sqrt() / r)
        }
        _ => moment_match(&log_post, prior, noise, y)?,
    };
    let mut lo = (centre - WINDOW_SD * sd).max(lower);
    let mut hi = centre + WINDOW_SD * sd;
    let peak = linspace(lo, hi, 2001).into_iter().map(log_post).fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::Numerical(format!("posterior log density has no finite maximum at y = {y}")));
    }
    for _ in 0..64 {
        if lo <= lower || log_post(lo) < peak - WINDOW_LOG_DROP {
            break;
        }
        lo = (lo - sd).max(lower);
    }
    for _ in 0..64 {
        if log_post(hi) < peak - WINDOW_LOG_DROP {
            break;
        }
        hi += sd;
    }
    GridDensity::from_fn(lo, hi, DEFAULT_GRID_NODES, |x| {
        let v = (log_post(x) - peak).exp();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    })
}

fn moment_match<F: Fn(f64) -> f64>(log_post: &F, prior: &Prior, noise: &NoiseModel, y: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = prior.effective_support();
    if matches!(noise, NoiseModel::Gaussian) {
        lo = lo.min(y - 12.0);
        hi = hi.max(y + 12.0);
    }
    lo = lo.max(prior.support_lower());
    let xs = linspace(lo, hi, 20001);
    let ls: Vec<f64> = xs.iter().map(|&x| log_post(x)).collect();
    let m = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Numerical(format!("posterior log density has no finite maximum at y = {y}")));
    }
    let ws: Vec<f64> = ls.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = ws.iter().sum();
    let mean = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / z;
    let var = xs.iter().zip(&ws).map(|(x, w)| (x - mean) * (x - mean) * w).sum::<f64>() / z;
    let h = xs[1] - xs[0];
    Ok((mean, var.sqrt().max(h)))
}

/// Posterior mean.
pub fn cond_mean(post: &Posterior) -> f64 {
    post.expect(|x| x, &[])
}

/// Posterior median: the smallest `t` with `F(t) >= 1/2`.
pub fn cond_median(post: &Posterior) -> f64 {
    match post {
        Posterior::Atoms(p) => {
            let mut acc = 0.0;
            for (x, w) in &p.atoms {
                acc += w;
                if acc >= 0.5 {
                    return *x;
                }
            }
            p.atoms[p.atoms.len() - 1].0
        }
        Posterior::Grid(p) => {
            let d = &p.density;
            let cdf = d.node_cdf();
            let k = cdf.partition_point(|c| *c < 0.5);
            if k == 0 {
                return d.lower();
            }
            let cell = (k - 1).min(cdf.len() - 2);
            let x = d.nodes();
            let (mut lo, mut hi) = (x[cell], x[cell + 1]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if d.cdf(mid) >= 0.5 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    }
}

/// Minimizer of `t ↦ E[|X - t|^p | Y = y]` for `p >= 1`.
///
/// Bisection on the nondecreasing derivative
/// `t ↦ E[sign(t - X)|t - X|^{p-1}]`, returning the smallest `t` where it
/// is nonnegative. For `p = 1` this is the infimum median.
pub fn cond_lp_estimator(post: &Posterior, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("loss exponent must be >= 1, got {p}")));
    }
    let slope = |t: f64| -> f64 {
        post.expect(
            |x| {
                let d = t - x;
                if d == 0.0 {
                    0.0
                } else if p == 1.0 {
                    d.signum()
                } else {
                    d.signum() * d.abs().powf(p - 1.0)
                }
            },
            &[t],
        )
    };
    let (mut lo, mut hi) = post.bounds();
    if lo == hi {
        return Ok(lo);
    }
    if let Posterior::Grid(_) = post {
        let m = cond_mean(post);
        let sd = post.expect(|x| (x - m) * (x - m), &[]).sqrt();
        let (a, b) = (m - 12.0 * sd, m + 12.0 * sd);
        if a > lo && slope(a) < 0.0 {
            lo = a;
        }
        if b < hi && slope(b) >= 0.0 {
            hi = b;
        }
    }
    let scale = lo.abs().max(hi.abs()).max(hi - lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * scale || mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if let Posterior::Atoms(a) = post {
        if let Some((x, _)) = a.atoms.iter().find(|(x, _)| *x >= lo && *x <= hi) {
            return Ok(*x);
        }
    }
    Ok(hi)
}

/// Estimator families tabulated by [`estimator_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Mean,
    Median,
    Lp,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mean => "mean",
            EstimatorKind::Median => "median",
            EstimatorKind::Lp => "lp",
        }
    }
}

/// An estimator evaluated over a grid of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCurve {
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub p: f64,
    pub kind: EstimatorKind,
}

impl EstimatorCurve {
    /// `max_y |estimate(y) - a y|`.
    pub fn max_deviation_from_linear(&self, a: f64) -> f64 {
        self.ys.iter().zip(&self.values).map(|(y, v)| (v - a * y).abs()).fold(0.0, f64::max)
    }
}

/// Evaluate an estimator at each observation in `ys` (in parallel).
pub fn estimator_curve(
    prior: &Prior,
    noise: &NoiseModel,
    kind: EstimatorKind,
    p: f64,
    ys: &[f64],
) -> Result<EstimatorCurve> {
    let p = match kind {
        EstimatorKind::Mean => 2.0,
        EstimatorKind::Median => 1.0,
        EstimatorKind::Lp => p,
    };
    let values = ys
        .par_iter()
        .map(|&y| {
            let post = posterior(prior, noise, y)?;
            let v = match kind {
                EstimatorKind::Mean => cond_mean(&post),
                EstimatorKind::Median => cond_median(&post),
                EstimatorKind::Lp => cond_lp_estimator(&post, p)?,
            };
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numerical(format!("non-finite estimate at y = {y}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EstimatorCurve { ys: ys.to_vec(), values, p, kind })
}

/// Both routes to the posterior third cumulant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantRoutes {
    /// Central third moment of the posterior.
    pub moment: f64,
    /// Third derivative of the log marginal density.
    pub derivative: f64,
}

/// `ln f_Y(y)` under Gaussian noise.
pub fn log_marginal_gaussian(prior: &Prior, y: f64) -> Result<f64> {
    if let Some(atoms) = prior.atoms() {
        let ls: Vec<f64> = atoms.iter().map(|(x, w)| w.ln() - 0.5 * (y - x) * (y - x)).collect();
        let m = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = ls.iter().map(|l| (l - m).exp()).sum();
        return Ok(m + s.ln() - crate::specfun::LN_SQRT_2PI);
    }
    let v: f64 = prior.integrate_with(|x| norm_pdf(y - x), &[y])?;
    if !(v > 0.0) {
        return Err(Error::Numerical(format!("marginal density underflows at y = {y}")));
    }
    Ok(v.ln())
}

/// Compute the posterior third cumulant by both routes (Gaussian noise).
pub fn third_cumulant_routes(prior: &Prior, y: f64) -> Result<CumulantRoutes> {
    let post = posterior(prior, &NoiseModel::Gaussian, y)?;
    let m = cond_mean(&post);
    let moment = post.expect(|x| (x - m).powi(3), &[]);

    let d3 = |h: f64| -> Result<f64> {
        let l = |t: f64| log_marginal_gaussian(prior, t);
        Ok((l(y + 2.0 * h)? - 2.0 * l(y + h)? + 2.0 * l(y - h)? - l(y - 2.0 * h)?) / (2.0 * h * h * h))
    };
    let h = CUMULANT_STEP;
    let derivative = (4.0 * d3(0.5 * h)? - d3(h)?) / 3.0;
    Ok(CumulantRoutes { moment, derivative })
}

/// Third cumulant of `X | Y = y` under Gaussian noise. Returns the moment
/// route after checking it against the log-marginal derivative route.
pub fn posterior_third_cumulant(prior: &Prior, y: f64) -> Result<f64> {
    let r = third_cumulant_routes(prior, y)?;
    if (r.moment - r.derivative).abs() > CUMULANT_RECONCILE_TOL {
        return Err(Error::Numerical(format!(
            "third cumulant routes disagree at y = {y}: {} vs {}",
            r.moment, r.derivative
        )));
    }
    Ok(r.moment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{counterexample_prior, matched_gaussian_prior, CounterexampleParams};
    use crate::specfun::inv_lower_gamma;

    fn gauss() -> NoiseModel {
        NoiseModel::Gaussian
    }

    #[test]
    fn gaussian_conjugate_posterior() {
        for (s2, y) in [(1.0, 2.0), (3.0, -1.5), (0.2, 4.0)] {
            let prior = Prior::gaussian(0.0, s2).unwrap();
            let post = posterior(&prior, &gauss(), y).unwrap();
            let (mu, v) = (s2 * y / (1.0 + s2), s2 / (1.0 + s2));
            let Posterior::Grid(g) = &post else { panic!() };
            let sup = g
                .grid()
                .iter()
                .map(|&x| {
                    (g.pdf(x) - (-(x - mu).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()).abs()
                })
                .fold(0.0, f64::max);
            assert!(sup < 1e-8, "sup {sup}");
            assert!((cond_mean(&post) - mu).abs() < 1e-10);
            assert!((cond_median(&post) - mu).abs() < 1e-10);
        }
        let post = posterior(&Prior::gaussian(0.0, 1.0).unwrap(), &gauss(), 2.0).unwrap();
        assert!((cond_mean(&post) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_posterior() {
        let post = posterior(&Prior::point_mass(1.3).unwrap(), &gauss(), -4.0).unwrap();
        assert_eq!(cond_mean(&post), 1.3);
        assert_eq!(cond_median(&post), 1.3);
        assert_eq!(cond_lp_estimator(&post, 3.0).unwrap(), 1.3);
    }

    #[test]
    fn gamma_poisson_conjugate() {
        let prior = Prior::gamma(1.0, 1.0).unwrap();
        for y in [0.0, 1.0, 10.0, 20.0] {
            let post = posterior(&prior, &NoiseModel::Poisson, y).unwrap();
            let Posterior::Grid(g) = &post else { panic!() };
            let (s, r): (f64, f64) = (1.0 + y, 2.0);
            let lnorm = s * r.ln() - crate::specfun::ln_gamma(s);
            let sup = g
                .grid()
                .iter()
                .map(|&x| {
                    let e = if x <= 0.0 {
                        if s == 1.0 {
                            r
                        } else {
                            0.0
                        }
                    } else {
                        (lnorm + (s - 1.0) * x.ln() - r * x).exp()
                    };
                    (g.pdf(x) - e).abs()
                })
                .fold(0.0, f64::max);
            assert!(sup < 1e-8, "y={y} sup={sup}");
            assert!((cond_mean(&post) - s / r).abs() < 1e-9);
            let med = inv_lower_gamma(s, 0.5).unwrap() / r;
            assert!((cond_median(&post) - med).abs() < 1e-9, "y={y}");
        }
    }

    #[test]
    fn poisson_rejections() {
        let prior = Prior::gamma(1.0, 1.0).unwrap();
        assert!(matches!(posterior(&prior, &NoiseModel::Poisson, 1.5), Err(Error::Model(_))));
        assert!(matches!(posterior(&prior, &NoiseModel::Poisson, -1.0), Err(Error::Model(_))));
        let g = Prior::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(posterior(&g, &NoiseModel::Poisson, 1.0), Err(Error::Model(_))));
        let tp = Prior::two_point(-1.0, 1.0, 0.5).unwrap();
        assert!(matches!(posterior(&tp, &NoiseModel::Poisson, 1.0), Err(Error::Model(_))));
    }

    #[test]
    fn two_point_closed_forms() {
        let prior = Prior::two_point(-1.0, 1.0, 0.5).unwrap();
        for y in [-1.2, 0.3, 0.7, 2.0] {
            let post = posterior(&prior, &gauss(), y).unwrap();
            assert!((cond_mean(&post) - y.tanh()).abs() < 1e-15);
            let med = if y > 0.0 { 1.0 } else { -1.0 };
            assert_eq!(cond_median(&post), med);
            // Oracle: E|X - t|^3 has derivative zero where
            // w1 (t+1)^2 = w2 (1-t)^2 for t in (-1, 1).
            let w1 = (-y).exp() / (y.exp() + (-y).exp());
            let r = (w1 / (1.0 - w1)).sqrt();
            let t = (1.0 - r) / (1.0 + r);
            assert!((cond_lp_estimator(&post, 3.0).unwrap() - t).abs() < 1e-10);
            assert!((cond_lp_estimator(&post, 2.0).unwrap() - y.tanh()).abs() < 1e-10);
            assert_eq!(cond_lp_estimator(&post, 1.0).unwrap(), med);
        }
    }

    #[test]
    fn lp_reduces_to_mean_and_median_on_grids() {
        let priors = [
            Prior::gamma(2.5, 1.0).unwrap(),
            counterexample_prior(CounterexampleParams { a: 0.5, rho: 0.7, theta: 0.4, omega: 1.3 }).unwrap(),
        ];
        for prior in &priors {
            for y in [-1.0, 0.5, 2.5] {
                let post = posterior(prior, &gauss(), y).unwrap();
                let l2 = cond_lp_estimator(&post, 2.0).unwrap();
                let l1 = cond_lp_estimator(&post, 1.0).unwrap();
                assert!((l2 - cond_mean(&post)).abs() < 1e-8, "{} y={y}", prior.kind());
                assert!((l1 - cond_median(&post)).abs() < 1e-8, "{} y={y}", prior.kind());
            }
        }
    }

    #[test]
    fn matched_median_is_linear() {
        let a = 0.5;
        let ys = linspace(-5.0, 5.0, 21);
        let c =
            estimator_curve(&matched_gaussian_prior(a).unwrap(), &gauss(), EstimatorKind::Median, 1.0, &ys).unwrap();
        assert!(c.max_deviation_from_linear(a) < 1e-10);
    }

    #[test]
    fn cumulant_routes() {
        let tp = Prior::two_point(-1.0, 1.0, 0.5).unwrap();
        let r = third_cumulant_routes(&tp, 0.7).unwrap();
        let exact = -2.0 * 0.7f64.tanh() / 0.7f64.cosh().powi(2);
        assert!((r.moment - exact).abs() < 1e-14);
        assert!((r.derivative - exact).abs() < 1e-6);

        let g = Prior::gaussian(0.3, 2.0).unwrap();
        for y in [-3.0, 0.0, 1.7] {
            let k = posterior_third_cumulant(&g, y).unwrap();
            assert!(k.abs() < 1e-10);
        }
        assert_eq!(posterior_third_cumulant(&Prior::point_mass(2.0).unwrap(), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_exponent() {
        let post = posterior(&Prior::gaussian(0.0, 1.0).unwrap(), &gauss(), 0.0).unwrap();
        assert!(cond_lp_estimator(&post, 0.5).is_err());
    }
}
