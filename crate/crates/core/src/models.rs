//! Priors, noise channels and the special prior families.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Normal};

use crate::error::{ensure_finite, Error, Result};
use crate::grid::{linspace, trapezoid_weights, PiecewiseCubic};
use crate::quad::{integrate, QuadOptions, QuadValue};
use crate::specfun::ln_gamma;

/// Default node count for constructed grid densities.
pub const DEFAULT_GRID_NODES: usize = 4001;
/// Half-width of constructed grids, in envelope standard deviations.
pub const GRID_HALF_WIDTH_SD: f64 = 8.0;

/// A probability density tabulated on a grid.
///
/// Node values are normalized so that their trapezoid integral is one.
/// Integrals against the density use the piecewise-cubic interpolant,
/// renormalized by its own mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    interp: PiecewiseCubic,
    mass: f64,
    cdf: Vec<f64>,
}

impl GridDensity {
    /// Build from abscissae and unnormalized density values. Negative
    /// values are clamped to zero before normalization.
    pub fn new(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let f: Vec<f64> = f.into_iter().map(|v| if v < 0.0 { 0.0 } else { v }).collect();
        let raw = PiecewiseCubic::new(x, f)?;
        let z = raw.trapezoid_mass();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Model(format!("density has non-positive or non-finite mass {z}")));
        }
        let x = raw.nodes().to_vec();
        let f = raw.values().iter().map(|v| v / z).collect();
        let interp = PiecewiseCubic::new(x, f)?;
        let mut cdf = interp.node_cumulative();
        let mass = cdf[cdf.len() - 1];
        for c in cdf.iter_mut() {
            *c /= mass;
        }
        Ok(Self { interp, mass, cdf })
    }

    /// Tabulate `f` on a uniform grid.
    pub fn from_fn<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> Result<Self> {
        let x = linspace(lo, hi, n);
        let y = x.iter().map(|&t| f(t)).collect();
        Self::new(x, y)
    }

    pub fn nodes(&self) -> &[f64] {
        self.interp.nodes()
    }

    /// Node values (trapezoid-normalized).
    pub fn values(&self) -> &[f64] {
        self.interp.values()
    }

    pub fn interpolant(&self) -> &PiecewiseCubic {
        &self.interp
    }

    pub fn lower(&self) -> f64 {
        self.interp.lower()
    }

    pub fn upper(&self) -> f64 {
        self.interp.upper()
    }

    pub fn trapezoid_mass(&self) -> f64 {
        self.interp.trapezoid_mass()
    }

    /// Density at `t`, consistent with [`GridDensity::integrate`].
    pub fn pdf(&self, t: f64) -> f64 {
        self.interp.eval(t) / self.mass
    }

    /// Distribution function at `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= self.lower() {
            return 0.0;
        }
        if t >= self.upper() {
            return 1.0;
        }
        let c = self.interp.cell_of(t);
        self.cdf[c] + self.interp.partial_cell(c, t) / self.mass
    }

    /// Distribution function at the nodes.
    pub fn node_cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// `∫ g dP` with the given breakpoints.
    pub fn integrate<T: QuadValue, G: Fn(f64) -> T>(&self, g: &G, breaks: &[f64]) -> T {
        self.interp.integrate(g, breaks) * (1.0 / self.mass)
    }

    /// Discrete total-variation distance to `other`, evaluated on this grid
    /// with trapezoid weights.
    pub fn tv_distance(&self, other: &GridDensity) -> f64 {
        let w = trapezoid_weights(self.nodes());
        let same = self.nodes() == other.nodes();
        self.nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let g = if same { other.values()[i] } else { other.interp.eval(x) };
                w[i] * (self.values()[i] - g).abs()
            })
            .sum::<f64>()
            * 0.5
    }

    /// Discrete total-variation distance to a reference density function.
    pub fn tv_distance_to<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let w = trapezoid_weights(self.nodes());
        self.nodes().iter().zip(self.values()).zip(&w).map(|((&x, &v), &wi)| wi * (v - f(x)).abs()).sum::<f64>() * 0.5
    }

    /// The law of `X + c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let x = self.nodes().iter().map(|v| v + c).collect();
        Self::new(x, self.values().to_vec())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => i.min(self.cdf.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.cdf.len() - 2),
        };
        let x = self.nodes();
        x[i] + (x[i + 1] - x[i]) * rng.random::<f64>()
    }
}

/// A probability law on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    PointMass {
        location: f64,
    },
    /// Mass `weight` at `x1` and `1 - weight` at `x2`.
    TwoPoint {
        x1: f64,
        x2: f64,
        weight: f64,
    },
    Grid(GridDensity),
}

impl Prior {
    /// Gaussian prior; zero variance gives a point mass.
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        ensure_finite("mean", mean)?;
        ensure_finite("variance", variance)?;
        if variance < 0.0 {
            return Err(Error::InvalidArgument(format!("variance must be nonnegative, got {variance}")));
        }
        if variance == 0.0 {
            return Ok(Prior::PointMass { location: mean });
        }
        Ok(Prior::Gaussian { mean, variance })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma needs shape, rate > 0, got ({shape}, {rate})")));
        }
        Ok(Prior::Gamma { shape, rate })
    }

    pub fn point_mass(location: f64) -> Result<Self> {
        ensure_finite("location", location)?;
        Ok(Prior::PointMass { location })
    }

    pub fn two_point(x1: f64, x2: f64, weight: f64) -> Result<Self> {
        ensure_finite("x1", x1)?;
        ensure_finite("x2", x2)?;
        if !(weight > 0.0 && weight < 1.0) {
            return Err(Error::InvalidArgument(format!("two-point weight must lie in (0, 1), got {weight}")));
        }
        Ok(Prior::TwoPoint { x1, x2, weight })
    }

    pub fn grid(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        Ok(Prior::Grid(GridDensity::new(x, f)?))
    }

    /// Atoms and weights for atomic priors.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Prior::PointMass { location } => Some(vec![(location, 1.0)]),
            Prior::TwoPoint { x1, x2, weight } => Some(vec![(x1, weight), (x2, 1.0 - weight)]),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Prior::PointMass { .. } | Prior::TwoPoint { .. })
    }

    /// Interval carrying all but a negligible fraction of the mass.
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            Prior::Gaussian { mean, variance } => {
                let s = variance.sqrt();
                (mean - 12.0 * s, mean + 12.0 * s)
            }
            Prior::Gamma { shape, rate } => (0.0, gamma_upper(*shape, *rate)),
            Prior::PointMass { location } => (*location, *location),
            Prior::TwoPoint { x1, x2, .. } => (x1.min(*x2), x1.max(*x2)),
            Prior::Grid(g) => (g.lower(), g.upper()),
        }
    }

    /// Lower end of the support (may be `-inf`).
    pub fn support_lower(&self) -> f64 {
        match self {
            Prior::Gaussian { .. } => f64::NEG_INFINITY,
            Prior::Gamma { .. } => 0.0,
            _ => self.effective_support().0,
        }
    }

    /// Log density for absolutely continuous priors.
    pub fn log_density(&self, x: f64) -> Option<f64> {
        match *self {
            Prior::Gaussian { mean, variance } => {
                let d = x - mean;
                Some(-0.5 * d * d / variance - 0.5 * (2.0 * PI * variance).ln())
            }
            Prior::Gamma { shape, rate } => Some(if x < 0.0 {
                f64::NEG_INFINITY
            } else if x == 0.0 {
                if shape < 1.0 {
                    f64::INFINITY
                } else if shape == 1.0 {
                    rate.ln()
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }),
            Prior::Grid(ref g) => Some(g.pdf(x).ln()),
            _ => None,
        }
    }

    /// `∫ g dP`. Interior points where `g` is not smooth should be listed
    /// in `breaks`.
    pub fn integrate_with<T: QuadValue, G: Fn(f64) -> T>(&self, g: G, breaks: &[f64]) -> Result<T> {
        match self {
            Prior::PointMass { location } => Ok(g(*location)),
            Prior::TwoPoint { x1, x2, weight } => Ok(g(*x1) * *weight + g(*x2) * (1.0 - weight)),
            Prior::Grid(d) => Ok(d.integrate(&g, breaks)),
            Prior::Gaussian { mean, variance } => {
                let s = variance.sqrt();
                let norm = 1.0 / (2.0 * PI * variance).sqrt();
                let h = |x: f64| {
                    let d = (x - mean) / s;
                    g(x) * (norm * (-0.5 * d * d).exp())
                };
                let mut bs: Vec<f64> = breaks.to_vec();
                bs.extend((-4..=4).map(|k| mean + 3.0 * s * k as f64));
                let e = integrate(h, mean - 12.0 * s, mean + 12.0 * s, &bs, QuadOptions::scaled(1e-13, 1e-14))?;
                Ok(e.value)
            }
            Prior::Gamma { shape, rate } => {
                let (shape, rate) = (*shape, *rate);
                let lnorm = shape * rate.ln() - ln_gamma(shape);
                let h = |x: f64| {
                    if x <= 0.0 {
                        return T::zero();
                    }
                    g(x) * (lnorm + (shape - 1.0) * x.ln() - rate * x).exp()
                };
                let upper = gamma_upper(shape, rate);
                let mode = ((shape - 1.0) / rate).max(0.0);
                let sd = shape.sqrt() / rate;
                let mut bs: Vec<f64> = breaks.to_vec();
                bs.extend([mode, mode + sd, mode + 4.0 * sd, (mode - sd).max(0.0), shape.min(1.0) * 1e-3 / rate]);
                let e = integrate(h, 0.0, upper, &bs, QuadOptions::scaled(1e-13, 1e-14))?;
                Ok(e.value)
            }
        }
    }

    /// Draw one sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match self {
            Prior::Gaussian { mean, variance } => {
                Normal::new(*mean, variance.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng)
            }
            Prior::Gamma { shape, rate } => {
                GammaDist::new(*shape, 1.0 / rate).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng)
            }
            Prior::PointMass { location } => *location,
            Prior::TwoPoint { x1, x2, weight } => {
                if rng.random::<f64>() < *weight {
                    *x1
                } else {
                    *x2
                }
            }
            Prior::Grid(g) => g.sample(rng),
        })
    }

    /// Short human-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Prior::Gaussian { .. } => "gaussian",
            Prior::Gamma { .. } => "gamma",
            Prior::PointMass { .. } => "point-mass",
            Prior::TwoPoint { .. } => "two-point",
            Prior::Grid(_) => "grid",
        }
    }
}

fn gamma_upper(shape: f64, rate: f64) -> f64 {
    (shape + 12.0 * shape.sqrt() + 45.0) / rate
}

/// Mean and variance of a prior.
pub fn prior_moments(prior: &Prior) -> Result<(f64, f64)> {
    Ok(match prior {
        Prior::Gaussian { mean, variance } => (*mean, *variance),
        Prior::Gamma { shape, rate } => (shape / rate, shape / (rate * rate)),
        Prior::PointMass { location } => (*location, 0.0),
        Prior::TwoPoint { x1, x2, weight } => {
            let m = weight * x1 + (1.0 - weight) * x2;
            (m, weight * (1.0 - weight) * (x1 - x2) * (x1 - x2))
        }
        Prior::Grid(g) => {
            let m: f64 = g.integrate(&|x| x, &[]);
            let v: f64 = g.integrate(&|x| (x - m) * (x - m), &[]);
            (m, v)
        }
    })
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A natural exponential family channel `h(y) e^{xy - ψ(x)}`.
#[derive(Clone)]
pub struct NefNoise {
    pub name: String,
    psi: RealFn,
    base: Option<RealFn>,
    /// Declared finite bound for `sup_x (x²/2 - ψ(x))`.
    pub sup_bound: Option<f64>,
    /// Number of continuous derivatives claimed for ψ.
    pub smoothness: u32,
}

impl NefNoise {
    pub fn new<P>(name: impl Into<String>, psi: P, smoothness: u32) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), psi: Arc::new(psi), base: None, sup_bound: None, smoothness }
    }

    pub fn with_base<H>(mut self, h: H) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.base = Some(Arc::new(h));
        self
    }

    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        self.sup_bound = Some(bound);
        self
    }

    pub fn psi(&self, x: f64) -> f64 {
        (self.psi)(x)
    }

    /// Base measure density `h(y)`, if declared.
    pub fn base(&self, y: f64) -> Option<f64> {
        self.base.as_ref().map(|h| h(y))
    }

    /// The Gaussian channel in this form: ψ(x) = x²/2, h = φ.
    pub fn gaussian() -> Self {
        Self::new("gaussian", |x| 0.5 * x * x, u32::MAX).with_base(crate::specfun::norm_pdf).with_sup_bound(0.0)
    }
}

impl fmt::Debug for NefNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NefNoise")
            .field("name", &self.name)
            .field("sup_bound", &self.sup_bound)
            .field("smoothness", &self.smoothness)
            .field("has_base", &self.base.is_some())
            .finish()
    }
}

/// Observation channel.
#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// `Y = X + Z`, `Z ~ N(0, 1)`.
    Gaussian,
    /// `Y | X = x ~ Poisson(x)`.
    Poisson,
    NaturalExpFamily(NefNoise),
}

impl NoiseModel {
    /// `ln p(y | x)` up to terms not depending on `x`.
    pub fn log_likelihood(&self, x: f64, y: f64) -> f64 {
        match self {
            NoiseModel::Gaussian => -0.5 * (y - x) * (y - x),
            NoiseModel::Poisson => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else if y == 0.0 {
                    -x
                } else if x == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    y * x.ln() - x
                }
            }
            NoiseModel::NaturalExpFamily(n) => x * y - n.psi(x),
        }
    }

    pub fn kind(&self) -> &str {
        match self {
            NoiseModel::Gaussian => "gaussian",
            NoiseModel::Poisson => "poisson",
            NoiseModel::NaturalExpFamily(n) => &n.name,
        }
    }
}

/// Parameters of the cosine-modulated Gaussian family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleParams {
    pub a: f64,
    pub rho: f64,
    pub theta: f64,
    pub omega: f64,
}

impl CounterexampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::InvalidArgument(format!("a must lie in (0, 1), got {}", self.a)));
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        ensure_finite("theta", self.theta)?;
        ensure_finite("omega", self.omega)
    }

    /// Closed-form variance when `θ = 0`.
    pub fn variance_theta0(&self) -> f64 {
        let a = self.a;
        let w2 = self.omega * self.omega;
        let e = self.rho * (-w2 / (2.0 * (1.0 - a))).exp();
        a / (1.0 - a) * (1.0 + (1.0 - w2 / (1.0 - a)) * e) / (1.0 + e)
    }
}

fn check_slope(a: f64) -> Result<()> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("slope must lie in [0, 1), got {a}")));
    }
    Ok(())
}

/// The Gaussian prior with linear conditional median `a·y`: N(0, a/(1-a)).
pub fn matched_gaussian_prior(a: f64) -> Result<Prior> {
    check_slope(a)?;
    Prior::gaussian(0.0, a / (1.0 - a))
}

/// Density ∝ `exp(-((1-a)/a) x²/2) (1 + ρ cos(ω x/√a + θ))` on a grid
/// covering ±8 envelope standard deviations.
pub fn counterexample_prior(params: CounterexampleParams) -> Result<Prior> {
    counterexample_prior_with_nodes(params, DEFAULT_GRID_NODES)
}

pub fn counterexample_prior_with_nodes(params: CounterexampleParams, nodes: usize) -> Result<Prior> {
    params.validate()?;
    let CounterexampleParams { a, rho, theta, omega } = params;
    let s = (a / (1.0 - a)).sqrt();
    let half = GRID_HALF_WIDTH_SD * s;
    let k = omega / a.sqrt();
    let g = GridDensity::from_fn(-half, half, nodes, |x| {
        let z = x / s;
        (-0.5 * z * z).exp() * (1.0 + rho * (k * x + theta).cos())
    })?;
    Ok(Prior::Grid(g))
}

/// The prior ∝ `exp(-x²/(2a) + ψ(x))` matched to a natural exponential
/// family channel.
pub fn nef_matched_prior(noise: &NefNoise, a: f64) -> Result<Prior> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("a must lie in (0, 1), got {a}")));
    }
    match noise.sup_bound {
        Some(b) if b.is_finite() => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "channel '{}' must declare a finite bound for sup (x^2/2 - psi)",
                noise.name
            )))
        }
    }
    let s = (a / (1.0 - a)).sqrt();
    let half = GRID_HALF_WIDTH_SD * s;
    let logf = |x: f64| -x * x / (2.0 * a) + noise.psi(x);

    // Tail check on an extension to twice the grid half-width.
    let ext = linspace(-2.0 * half, 2.0 * half, 2 * DEFAULT_GRID_NODES - 1);
    let logs: Vec<f64> = ext.iter().map(|&x| logf(x)).collect();
    if logs.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Model(format!("density for '{}' is not finite", noise.name)));
    }
    let lmax = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lmax.is_finite() {
        return Err(Error::Model(format!("density for '{}' vanishes or overflows", noise.name)));
    }
    let vals: Vec<f64> = logs.iter().map(|v| (v - lmax).exp()).collect();
    let w = trapezoid_weights(&ext);
    let total: f64 = vals.iter().zip(&w).map(|(v, w)| v * w).sum();
    let tail: f64 = ext.iter().zip(vals.iter().zip(&w)).filter(|(x, _)| x.abs() > half).map(|(_, (v, w))| v * w).sum();
    let edge = vals[0].max(vals[vals.len() - 1]);
    if !(total.is_finite() && total > 0.0) || tail / total > 1e-6 || edge > 1e-6 {
        return Err(Error::Model(format!(
            "exp(-x^2/(2a) + psi) is not integrable for '{}' at a = {a} (tail mass {:.3e})",
            noise.name,
            tail / total
        )));
    }
    let g = GridDensity::from_fn(-half, half, DEFAULT_GRID_NODES, |x| (logf(x) - lmax).exp())?;
    Ok(Prior::Grid(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matched_prior_values() {
        assert_eq!(matched_gaussian_prior(0.5).unwrap(), Prior::Gaussian { mean: 0.0, variance: 1.0 });
        assert_eq!(matched_gaussian_prior(0.0).unwrap(), Prior::PointMass { location: 0.0 });
        match matched_gaussian_prior(0.75).unwrap() {
            Prior::Gaussian { variance, .. } => assert_relative_eq!(variance, 3.0, epsilon = 1e-15),
            p => panic!("{p:?}"),
        }
        assert!(matched_gaussian_prior(1.0).is_err());
        assert!(matched_gaussian_prior(-0.1).is_err());
    }

    #[test]
    fn parametric_moments() {
        assert_eq!(prior_moments(&Prior::gaussian(0.0, 3.0).unwrap()).unwrap(), (0.0, 3.0));
        assert_eq!(prior_moments(&Prior::gamma(1.0, 1.0).unwrap()).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn integrate_matches_moments() {
        for p in [Prior::gaussian(0.4, 2.0).unwrap(), Prior::gamma(2.5, 1.5).unwrap(), Prior::gamma(0.6, 2.0).unwrap()]
        {
            let (m, v) = prior_moments(&p).unwrap();
            let m0: f64 = p.integrate_with(|_| 1.0, &[]).unwrap();
            let m1: f64 = p.integrate_with(|x| x, &[]).unwrap();
            let m2: f64 = p.integrate_with(|x| (x - m) * (x - m), &[]).unwrap();
            assert_relative_eq!(m0, 1.0, epsilon = 1e-11);
            assert_relative_eq!(m1, m, epsilon = 1e-11);
            assert_relative_eq!(m2, v, epsilon = 1e-10);
        }
    }

    #[test]
    fn counterexample_rho_zero_is_matched_gaussian() {
        let p = counterexample_prior(CounterexampleParams { a: 0.5, rho: 0.0, theta: 0.3, omega: 1.7 }).unwrap();
        let Prior::Grid(g) = p else { panic!() };
        assert!((g.trapezoid_mass() - 1.0).abs() < 1e-12);
        assert!(g.tv_distance_to(crate::specfun::norm_pdf) < 1e-10);
    }

    #[test]
    fn counterexample_variance_formula() {
        for (a, rho, omega) in [(0.5, 1.0, 0.0), (0.5, 0.4, 0.0), (0.5, 1.0, 3f64.sqrt()), (0.3, -0.7, 1.1)] {
            let params = CounterexampleParams { a, rho, theta: 0.0, omega };
            let (m, v) = prior_moments(&counterexample_prior(params).unwrap()).unwrap();
            assert!(m.abs() < 1e-12);
            assert!((v - params.variance_theta0()).abs() < 1e-9, "{params:?}: {v}");
        }
        let unit = CounterexampleParams { a: 0.5, rho: 0.8, theta: 0.0, omega: 0.0 };
        assert!((unit.variance_theta0() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counterexample_rejects_bad_params() {
        assert!(counterexample_prior(CounterexampleParams { a: 0.5, rho: 1.2, theta: 0.0, omega: 1.0 }).is_err());
        assert!(counterexample_prior(CounterexampleParams { a: 1.0, rho: 0.2, theta: 0.0, omega: 1.0 }).is_err());
    }

    #[test]
    fn nef_matched_prior_cases() {
        let g = nef_matched_prior(&NefNoise::gaussian(), 0.5).unwrap();
        let Prior::Grid(d) = g else { panic!() };
        assert!(d.tv_distance_to(crate::specfun::norm_pdf) < 1e-10);

        let bumped = NefNoise::new("bump", |x| 0.5 * x * x - 1.0 / (1.0 + x * x), 100).with_sup_bound(1.0);
        let Prior::Grid(d) = nef_matched_prior(&bumped, 0.5).unwrap() else { panic!() };
        assert!((d.trapezoid_mass() - 1.0).abs() < 1e-12);
        assert!(d.values().iter().all(|v| *v >= 0.0));

        let steep = NefNoise::new("steep", |x| x * x, 100).with_sup_bound(0.0);
        assert!(matches!(nef_matched_prior(&steep, 0.9), Err(Error::Model(_))));

        let undeclared = NefNoise::new("undeclared", |x| 0.5 * x * x, 100);
        assert!(matches!(nef_matched_prior(&undeclared, 0.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grid_density_clamps_and_normalizes() {
        let x = linspace(0.0, 1.0, 11);
        let mut f = vec![1.0; 11];
        f[3] = -1e-18;
        let g = GridDensity::new(x, f).unwrap();
        assert!(g.values().iter().all(|v| *v >= 0.0));
        assert!((g.trapezoid_mass() - 1.0).abs() < 1e-15);
        assert!(g.node_cdf().windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(g.cdf(1.0), 1.0);
        assert!(GridDensity::new(linspace(0.0, 1.0, 5), vec![0.0; 5]).is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_matches_mean() {
        let priors = [
            Prior::gaussian(1.0, 4.0).unwrap(),
            Prior::gamma(3.0, 2.0).unwrap(),
            Prior::two_point(-1.0, 1.0, 0.3).unwrap(),
            counterexample_prior(CounterexampleParams { a: 0.5, rho: 0.5, theta: 1.0, omega: 1.0 }).unwrap(),
        ];
        for p in &priors {
            let mut r1 = ChaCha8Rng::seed_from_u64(7);
            let mut r2 = ChaCha8Rng::seed_from_u64(7);
            let s1: Vec<f64> = (0..200_000).map(|_| p.sample(&mut r1).unwrap()).collect();
            let s2: Vec<f64> = (0..200_000).map(|_| p.sample(&mut r2).unwrap()).collect();
            assert_eq!(s1, s2);
            let (m, v) = prior_moments(p).unwrap();
            let mean = s1.iter().sum::<f64>() / s1.len() as f64;
            assert!((mean - m).abs() < 5.0 * (v / s1.len() as f64).sqrt() + 1e-12, "{}", p.kind());
        }
    }

    #[test]
    fn poisson_loglik() {
        assert_eq!(NoiseModel::Poisson.log_likelihood(0.0, 0.0), 0.0);
        assert_eq!(NoiseModel::Poisson.log_likelihood(0.0, 2.0), f64::NEG_INFINITY);
        assert!((NoiseModel::Poisson.log_likelihood(2.0, 3.0) - (3.0 * 2f64.ln() - 2.0)).abs() < 1e-15);
    }
}
