//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use linmed_core::grid::linspace;
use linmed_core::models::{
    counterexample_prior_with_nodes, matched_gaussian_prior, CounterexampleParams, GridDensity, NoiseModel, Prior,
    DEFAULT_GRID_NODES,
};

use crate::CliError;

/// Keys accepted at the top level of every config besides the command's own.
const COMMON_KEYS: [&str; 3] = ["output", "seed", "description"];

/// A parsed config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Stem of the emitted files; defaults to the command name.
    pub output: Option<String>,
    pub seed: Option<u64>,
    pub description: Option<String>,
    /// Directory that relative paths inside the config resolve against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base)
    }

    pub fn from_str(text: &str, base_dir: PathBuf) -> Result<Self, CliError> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid JSON: {e}")))?;
        let obj = doc.as_object_mut().ok_or_else(|| CliError::Usage("config must be a JSON object".into()))?;
        let mut common = serde_json::Map::new();
        for k in COMMON_KEYS {
            if let Some(v) = obj.remove(k) {
                common.insert(k.to_string(), v);
            }
        }
        let command: Command =
            serde_json::from_value(doc).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        let output = match common.get("output") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if valid_stem(s) => Some(s.clone()),
            Some(v) => return Err(CliError::Usage(format!("output must be a plain file stem, got {v}"))),
        };
        let seed = match common.get("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| CliError::Usage(format!("seed must be a u64, got {v}")))?),
        };
        let description = common.get("description").and_then(Value::as_str).map(str::to_string);
        let cfg = ExperimentConfig { command, output, seed, description, base_dir };
        cfg.command.validate()?;
        Ok(cfg)
    }

    pub fn stem(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.command.name().to_string())
    }
}

fn valid_stem(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) && !s.starts_with('.')
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn positive(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(t) if !(t > 0.0 && t.is_finite()) => usage(format!("{name} must be positive, got {t}")),
        _ => Ok(()),
    }
}

fn nonempty(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return usage(format!("{name} must be a non-empty list of finite numbers"));
    }
    Ok(())
}

/// `count` equally spaced points on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn validate(&self, name: &str) -> Result<(), CliError> {
        if self.count < 2 {
            return usage(format!("{name}.count must be at least 2, got {}", self.count));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return usage(format!("{name} needs finite min < max, got [{}, {}]", self.min, self.max));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSpec {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    MatchedGaussian {
        a: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    PointMass {
        location: f64,
    },
    TwoPoint {
        x1: f64,
        x2: f64,
        weight: f64,
    },
    /// ∝ exp(-((1-a)/a) x²/2) (1 + ρ cos(ω x/√a + θ)).
    Counterexample {
        a: f64,
        rho: f64,
        theta: f64,
        omega: f64,
        nodes: Option<usize>,
    },
    /// Matched Gaussian times (1 + ε cos(ω x)).
    ModulatedGaussian {
        a: f64,
        eps: f64,
        omega: f64,
        nodes: Option<usize>,
    },
    /// Gamma density tabulated on a uniform grid over [0, upper].
    GammaGrid {
        shape: f64,
        rate: f64,
        nodes: Option<usize>,
        upper: Option<f64>,
    },
    /// A density read from a CSV file.
    GridCsv {
        path: String,
        x_column: Option<String>,
        column: Option<String>,
    },
}

impl PriorSpec {
    pub fn build(&self, base: &Path) -> Result<Prior, CliError> {
        let nodes = |n: &Option<usize>| n.unwrap_or(DEFAULT_GRID_NODES);
        Ok(match self {
            PriorSpec::Gaussian { mean, variance } => Prior::gaussian(*mean, *variance)?,
            PriorSpec::MatchedGaussian { a } => matched_gaussian_prior(*a)?,
            PriorSpec::Gamma { shape, rate } => Prior::gamma(*shape, *rate)?,
            PriorSpec::PointMass { location } => Prior::point_mass(*location)?,
            PriorSpec::TwoPoint { x1, x2, weight } => Prior::two_point(*x1, *x2, *weight)?,
            PriorSpec::Counterexample { a, rho, theta, omega, nodes: n } => counterexample_prior_with_nodes(
                CounterexampleParams { a: *a, rho: *rho, theta: *theta, omega: *omega },
                nodes(n),
            )?,
            PriorSpec::ModulatedGaussian { a, eps, omega, nodes: n } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return usage(format!("a must lie in (0, 1), got {a}"));
                }
                let params = CounterexampleParams { a: *a, rho: *eps, theta: 0.0, omega: omega * a.sqrt() };
                counterexample_prior_with_nodes(params, nodes(n))?
            }
            PriorSpec::GammaGrid { shape, rate, nodes: n, upper } => {
                if !(*shape >= 1.0 && shape.is_finite() && *rate > 0.0 && rate.is_finite()) {
                    return usage(format!("gamma-grid needs shape >= 1 and rate > 0, got ({shape}, {rate})"));
                }
                let hi = upper.unwrap_or((shape + 12.0 * shape.sqrt() + 45.0) / rate);
                let (s, r) = (*shape, *rate);
                Prior::Grid(GridDensity::from_fn(0.0, hi, nodes(n), |x| ((s - 1.0) * x.ln() - r * x).exp())?)
            }
            PriorSpec::GridCsv { path, x_column, column } => {
                let (x, f) = read_grid_csv(
                    &base.join(path),
                    x_column.as_deref().unwrap_or("x"),
                    column.as_deref().unwrap_or("density"),
                )?;
                Prior::Grid(GridDensity::new(x, f)?)
            }
        })
    }
}

/// Read two numeric columns from a headed CSV file.
pub fn read_grid_csv(path: &Path, x_column: &str, column: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read grid CSV {}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Usage(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("column '{name}' not found in {}", path.display())))
    };
    let (ix, iy) = (find(x_column)?, find(column)?);
    let (mut xs, mut fs) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Usage(e.to_string()))?;
        let parse = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Usage(format!("non-numeric field in {}", path.display())))
        };
        xs.push(parse(ix)?);
        fs.push(parse(iy)?);
    }
    Ok((xs, fs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    Gaussian,
    Poisson,
}

impl NoiseSpec {
    pub fn build(&self) -> NoiseModel {
        match self {
            NoiseSpec::Gaussian => NoiseModel::Gaussian,
            NoiseSpec::Poisson => NoiseModel::Poisson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorSpec {
    Mean,
    Median,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FpConvention {
    /// Weight `e^{-x²}`.
    #[default]
    Exp,
    /// Weight `φ(x)`.
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMethodSpec {
    #[default]
    Quadrature,
    MonteCarlo,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryExpectation {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaborCase {
    pub mu: f64,
    pub sigma2: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub prior: PriorSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub estimator: EstimatorSpec,
    pub p: Option<f64>,
    pub y_grid: GridSpec,
    /// If set, assert `max|estimate - a y| <= tolerance`.
    pub a: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MedianLinearityConfig {
    pub prior: PriorSpec,
    pub a: f64,
    pub y_grid: GridSpec,
    pub tolerance: Option<f64>,
    pub expect_linear: Option<bool>,
    pub min_sup_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpLinearityConfig {
    pub prior: PriorSpec,
    pub a: f64,
    pub p: f64,
    pub y_grid: GridSpec,
    pub tolerance: Option<f64>,
    pub expect_linear: Option<bool>,
    /// If set, also assert `max|cond_lp_estimator - a y| <=` this value.
    pub estimator_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionConfig {
    pub prior: PriorSpec,
    pub a: f64,
    pub v_grid: GridSpec,
    pub tolerance: Option<f64>,
    pub expect_linear: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaborConfig {
    pub a: f64,
    pub cases: Vec<GaborCase>,
    pub y_grid: GridSpec,
    /// Which tabulated first-quadrant erf zero (1, 2 or 3) builds the null member.
    pub erf_zero: Option<usize>,
    pub null_y_grid: Option<GridSpec>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpRootsConfig {
    pub ps: Vec<f64>,
    pub w_max: Option<f64>,
    #[serde(default)]
    pub convention: FpConvention,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpOdeConfig {
    pub ps: Vec<f64>,
    pub w_grid: GridSpec,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DawsonConfig {
    pub w_grid: GridSpec,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskScanConfig {
    pub prior: PriorSpec,
    pub ps: Vec<f64>,
    pub a_grid: GridSpec,
    #[serde(default)]
    pub method: RiskMethodSpec,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonConfig {
    pub alpha: f64,
    pub beta: f64,
    pub y_max: u32,
    /// Fixture with reference medians, relative to the config file.
    pub reference: Option<String>,
    pub tolerance: Option<f64>,
    /// Inclusive bounds for `median - mean`.
    pub difference_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleDensityConfig {
    pub a: f64,
    pub rho: f64,
    pub omega: f64,
    pub thetas: Vec<f64>,
    pub nodes: Option<usize>,
    /// If set, check the L^p linearity residual of every density.
    pub verify_p: Option<f64>,
    pub y_grid: Option<GridSpec>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryConfig {
    pub prior: PriorSpec,
    pub y_grid: GridSpec,
    pub expect: SymmetryExpectation,
    pub tolerance: Option<f64>,
    pub asymmetry_threshold: Option<f64>,
    pub route_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Estimate(EstimateConfig),
    CheckMedianLinearity(MedianLinearityConfig),
    CheckLpLinearity(LpLinearityConfig),
    ConvolutionCheck(ConvolutionConfig),
    OperatorGabor(GaborConfig),
    FpRoots(FpRootsConfig),
    FpOdeCheck(FpOdeConfig),
    DawsonCheck(DawsonConfig),
    RiskScan(RiskScanConfig),
    PoissonDemo(PoissonConfig),
    CounterexampleDensity(CounterexampleDensityConfig),
    SymmetryCheck(SymmetryConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::CheckMedianLinearity(_) => "check-median-linearity",
            Command::CheckLpLinearity(_) => "check-lp-linearity",
            Command::ConvolutionCheck(_) => "convolution-check",
            Command::OperatorGabor(_) => "operator-gabor",
            Command::FpRoots(_) => "fp-roots",
            Command::FpOdeCheck(_) => "fp-ode-check",
            Command::DawsonCheck(_) => "dawson-check",
            Command::RiskScan(_) => "risk-scan",
            Command::PoissonDemo(_) => "poisson-demo",
            Command::CounterexampleDensity(_) => "counterexample-density",
            Command::SymmetryCheck(_) => "symmetry-check",
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        match self {
            Command::Estimate(c) => {
                c.y_grid.validate("y_grid")?;
                positive("tolerance", c.tolerance)?;
                if c.estimator == EstimatorSpec::Lp && c.p.is_none() {
                    return usage("estimator 'lp' needs p");
                }
            }
            Command::CheckMedianLinearity(c) => {
                c.y_grid.validate("y_grid")?;
                positive("tolerance", c.tolerance)?;
                positive("min_sup_norm", c.min_sup_norm)?;
            }
            Command::CheckLpLinearity(c) => {
                c.y_grid.validate("y_grid")?;
                positive("tolerance", c.tolerance)?;
                positive("estimator_tolerance", c.estimator_tolerance)?;
            }
            Command::ConvolutionCheck(c) => {
                c.v_grid.validate("v_grid")?;
                positive("tolerance", c.tolerance)?;
            }
            Command::OperatorGabor(c) => {
                c.y_grid.validate("y_grid")?;
                if let Some(g) = &c.null_y_grid {
                    g.validate("null_y_grid")?;
                }
                positive("tolerance", c.tolerance)?;
                if !matches!(c.erf_zero.unwrap_or(1), 1..=3) {
                    return usage("erf_zero must be 1, 2 or 3");
                }
            }
            Command::FpRoots(c) => {
                nonempty("ps", &c.ps)?;
                positive("w_max", c.w_max)?;
            }
            Command::FpOdeCheck(c) => {
                nonempty("ps", &c.ps)?;
                c.w_grid.validate("w_grid")?;
                positive("tolerance", c.tolerance)?;
            }
            Command::DawsonCheck(c) => {
                c.w_grid.validate("w_grid")?;
                positive("tolerance", c.tolerance)?;
            }
            Command::RiskScan(c) => {
                nonempty("ps", &c.ps)?;
                c.a_grid.validate("a_grid")?;
                if c.samples == Some(0) {
                    return usage("samples must be positive");
                }
            }
            Command::PoissonDemo(c) => {
                positive("alpha", Some(c.alpha))?;
                positive("beta", Some(c.beta))?;
                positive("tolerance", c.tolerance)?;
                if let Some([lo, hi]) = c.difference_range {
                    if !(lo <= hi) {
                        return usage("difference_range must be [lo, hi] with lo <= hi");
                    }
                }
            }
            Command::CounterexampleDensity(c) => {
                nonempty("thetas", &c.thetas)?;
                if let Some(g) = &c.y_grid {
                    g.validate("y_grid")?;
                }
                positive("tolerance", c.tolerance)?;
                if c.nodes.is_some_and(|n| n < 4) {
                    return usage("nodes must be at least 4");
                }
            }
            Command::SymmetryCheck(c) => {
                c.y_grid.validate("y_grid")?;
                positive("tolerance", c.tolerance)?;
                positive("asymmetry_threshold", c.asymmetry_threshold)?;
                positive("route_tolerance", c.route_tolerance)?;
            }
        }
        Ok(())
    }
}
