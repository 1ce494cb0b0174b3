//! One function per command. Each returns the tables to emit, the checks
//! it asserted and a JSON object of results.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use linmed_core::grid::linspace;
use linmed_core::linearity::{
    apply_ta, convolution_residual, dawson_fourier_check, expected_root_count, fp, fp_roots, fp_roots_phi,
    gabor_closed_form, gabor_null_params, lp_linearity_residual, median_linearity_residual, ode_residual_fd,
    GaborParams, DEFAULT_TOLERANCE, FP_ODE_STEP,
};
use linmed_core::models::{
    counterexample_prior_with_nodes, prior_moments, CounterexampleParams, NoiseModel, Prior, DEFAULT_GRID_NODES,
};
use linmed_core::posterior::{
    cond_mean, cond_median, estimator_curve, posterior, third_cumulant_routes, EstimatorKind,
};
use linmed_core::risk::{risk_derivative, risk_scan, RiskCurve, RiskMethod};
use linmed_core::specfun::{hermite_zeros, inv_lower_gamma, ln_gamma, refine_erf_zero, ERF_ZEROS_TABULATED};
use linmed_core::Error;

use crate::config::*;
use crate::output::{Cell, Check, Table};
use crate::CliError;

/// Default number of Monte Carlo draws for risk scans.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `(suffix, table)`; the CSV is written to `<stem><suffix>.csv`.
    pub tables: Vec<(String, Table)>,
    pub checks: Vec<Check>,
    pub results: Value,
}

impl Outcome {
    fn single(table: Table, checks: Vec<Check>, results: Value) -> Self {
        Self { tables: vec![(String::new(), table)], checks, results }
    }
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// A core error that marks a failed check rather than aborting the run.
fn failure(name: &str, e: &Error) -> Option<Check> {
    match e {
        Error::Domain(_) | Error::Numerical(_) | Error::Model(_) => Some(Check::flag(name, false, e.to_string())),
        Error::InvalidArgument(_) => None,
    }
}

pub fn dispatch(cmd: &Command, base: &Path, seed: Option<u64>) -> Result<Outcome, CliError> {
    match cmd {
        Command::Estimate(c) => estimate(c, base),
        Command::CheckMedianLinearity(c) => check_median(c, base),
        Command::CheckLpLinearity(c) => check_lp(c, base),
        Command::ConvolutionCheck(c) => convolution(c, base),
        Command::OperatorGabor(c) => operator_gabor(c),
        Command::FpRoots(c) => fp_roots_cmd(c),
        Command::FpOdeCheck(c) => fp_ode(c),
        Command::DawsonCheck(c) => dawson(c),
        Command::RiskScan(c) => risk(c, base, seed),
        Command::PoissonDemo(c) => poisson(c, base),
        Command::CounterexampleDensity(c) => counterexample_density(c),
        Command::SymmetryCheck(c) => symmetry(c, base),
    }
}

fn estimate(c: &EstimateConfig, base: &Path) -> Result<Outcome, CliError> {
    let prior = c.prior.build(base)?;
    let kind = match c.estimator {
        EstimatorSpec::Mean => EstimatorKind::Mean,
        EstimatorSpec::Median => EstimatorKind::Median,
        EstimatorSpec::Lp => EstimatorKind::Lp,
    };
    let ys = c.y_grid.points();
    let curve = estimator_curve(&prior, &c.noise.build(), kind, c.p.unwrap_or(2.0), &ys)?;
    let mut t = Table::new(&["y", "estimate", "deviation"]);
    for (y, v) in curve.ys.iter().zip(&curve.values) {
        t.push(vec![num(*y), num(*v), c.a.map(|a| v - a * y).into()]);
    }
    let mut checks = Vec::new();
    let mut results = json!({ "estimator": kind.name(), "p": curve.p, "noise": c.noise.build().kind() });
    if let Some(a) = c.a {
        let dev = curve.max_deviation_from_linear(a);
        checks.push(Check::at_most("linear", dev, c.tolerance.unwrap_or(DEFAULT_TOLERANCE)));
        results["a"] = json!(a);
        results["max_deviation"] = json!(dev);
    }
    Ok(Outcome::single(t, checks, results))
}

fn verdict_check(verdict: bool, expect: bool) -> Check {
    let want = if expect { "linear" } else { "not linear" };
    Check::flag("verdict", verdict == expect, format!("expected {want}, residual verdict linear = {verdict}"))
}

fn check_median(c: &MedianLinearityConfig, base: &Path) -> Result<Outcome, CliError> {
    let prior = c.prior.build(base)?;
    let r = median_linearity_residual(&prior, c.a, &c.y_grid.points())?
        .with_tolerance(c.tolerance.unwrap_or(DEFAULT_TOLERANCE));
    let mut t = Table::new(&["y", "residual"]);
    for (y, v) in r.ys.iter().zip(&r.residuals) {
        t.push(vec![num(*y), num(*v)]);
    }
    let mut checks = vec![verdict_check(r.verdict, c.expect_linear.unwrap_or(true))];
    if let Some(m) = c.min_sup_norm {
        checks.push(Check::at_least("min_sup_norm", r.sup_norm, m));
    }
    let results = json!({ "a": r.a, "sup_norm": r.sup_norm, "tolerance": r.tolerance, "verdict": r.verdict });
    Ok(Outcome::single(t, checks, results))
}

fn check_lp(c: &LpLinearityConfig, base: &Path) -> Result<Outcome, CliError> {
    let prior = c.prior.build(base)?;
    let ys = c.y_grid.points();
    let r = lp_linearity_residual(&prior, c.a, c.p, &ys)?.with_tolerance(c.tolerance.unwrap_or(DEFAULT_TOLERANCE));
    let mut checks = vec![verdict_check(r.verdict, c.expect_linear.unwrap_or(true))];
    let mut results =
        json!({ "a": r.a, "p": r.p, "sup_norm": r.sup_norm, "tolerance": r.tolerance, "verdict": r.verdict });
    let estimates = match c.estimator_tolerance {
        Some(tol) => {
            let curve = estimator_curve(&prior, &NoiseModel::Gaussian, EstimatorKind::Lp, c.p, &ys)?;
            let dev = curve.max_deviation_from_linear(c.a);
            checks.push(Check::at_most("estimator", dev, tol));
            results["estimator_max_deviation"] = json!(dev);
            Some(curve.values)
        }
        None => None,
    };
    let mut t = Table::new(&["y", "residual", "estimate", "deviation"]);
    for (i, (y, v)) in r.ys.iter().zip(&r.residuals).enumerate() {
        let e = estimates.as_ref().map(|e| e[i]);
        t.push(vec![num(*y), num(*v), e.into(), e.map(|e| e - c.a * y).into()]);
    }
    Ok(Outcome::single(t, checks, results))
}

fn convolution(c: &ConvolutionConfig, base: &Path) -> Result<Outcome, CliError> {
    let prior = c.prior.build(base)?;
    let mut t = Table::new(&["v", "value"]);
    match convolution_residual(&prior, c.a, &c.v_grid.points()) {
        Ok(r) => {
            let r = r.with_tolerance(c.tolerance.unwrap_or(DEFAULT_TOLERANCE));
            for (v, x) in r.ys.iter().zip(&r.residuals) {
                t.push(vec![num(*v), num(*x)]);
            }
            let checks = vec![verdict_check(r.verdict, c.expect_linear.unwrap_or(true))];
            let results = json!({ "a": r.a, "sup_norm": r.sup_norm, "tolerance": r.tolerance, "verdict": r.verdict });
            Ok(Outcome::single(t, checks, results))
        }
        Err(e) => {
            let check = failure("convolution_form", &e).ok_or(e)?;
            Ok(Outcome::single(t, vec![check], json!({ "a": c.a })))
        }
    }
}

fn operator_gabor(c: &GaborConfig) -> Result<Outcome, CliError> {
    let tol = c.tolerance.unwrap_or(1e-7);
    let ys = c.y_grid.points();
    let mut t = Table::new(&["case", "y", "numeric_re", "numeric_im", "closed_re", "closed_im", "abs_diff"]);
    let mut worst = 0.0f64;
    for (i, g) in c.cases.iter().enumerate() {
        let params = GaborParams { mu: g.mu, sigma2: g.sigma2, omega: g.omega };
        for &y in &ys {
            let q: Complex64 = apply_ta(|x| params.eval(x), c.a, y)?;
            let cf = gabor_closed_form(params, c.a, y)?;
            let d = (q - cf).norm();
            worst = worst.max(d);
            t.push(vec![Cell::Int(i as i64), num(y), num(q.re), num(q.im), num(cf.re), num(cf.im), num(d)]);
        }
    }
    let k = c.erf_zero.unwrap_or(1);
    let (re, im) = ERF_ZEROS_TABULATED[k - 1];
    let z = refine_erf_zero(Complex64::new(re, im))?;
    let np = gabor_null_params(z, c.a)?;
    let mut tn = Table::new(&["y", "re", "im", "abs"]);
    let mut null_sup = 0.0f64;
    for y in c.null_y_grid.unwrap_or(c.y_grid).points() {
        let v: Complex64 = apply_ta(|x| np.eval(x), c.a, y)?;
        null_sup = null_sup.max(v.norm());
        tn.push(vec![num(y), num(v.re), num(v.im), num(v.norm())]);
    }
    let mut checks = Vec::new();
    if !c.cases.is_empty() {
        checks.push(Check::at_most("closed_form", worst, tol));
    }
    checks.push(Check::at_most("null_space", null_sup, tol));
    let results = json!({
        "a": c.a,
        "max_closed_form_deviation": worst,
        "erf_zero": { "index": k, "re": z.re, "im": z.im },
        "null_params": { "mu": np.mu, "sigma2": np.sigma2, "omega": np.omega },
        "null_sup_norm": null_sup,
    });
    Ok(Outcome { tables: vec![(String::new(), t), ("_null".into(), tn)], checks, results })
}

fn fp_roots_cmd(c: &FpRootsConfig) -> Result<Outcome, CliError> {
    let w_max = c.w_max.unwrap_or(20.0);
    let mut t = Table::new(&["p", "index", "root", "bracket_lo", "bracket_hi", "residual"]);
    let mut checks = Vec::new();
    let mut per_p = Vec::new();
    for &p in &c.ps {
        let found = match c.convention {
            FpConvention::Exp => fp_roots(p, w_max),
            FpConvention::Phi => fp_roots_phi(p, w_max),
        };
        let expected = expected_root_count(p);
        let rs = match found {
            Ok(rs) => rs,
            Err(e) => {
                checks.push(failure(&format!("root_count_p{p}"), &e).ok_or(e)?);
                per_p.push(json!({ "p": p, "expected_count": expected, "roots": Value::Null }));
                continue;
            }
        };
        checks.push(Check::flag(
            format!("root_count_p{p}"),
            rs.len() == expected,
            format!("{} roots, expected {expected}", rs.len()),
        ));
        for (i, r) in rs.roots.iter().enumerate() {
            let (lo, hi) = rs.brackets[i];
            t.push(vec![num(p), Cell::Int(i as i64), num(*r), num(lo), num(hi), num(rs.residuals[i])]);
        }
        if p.fract() == 0.0 && p >= 2.0 && (p as usize).is_multiple_of(2) {
            let scale = if c.convention == FpConvention::Exp { SQRT_2 } else { 1.0 };
            let he: Vec<f64> = hermite_zeros(p as usize - 1)?.roots.into_iter().filter(|z| *z > 1e-12).collect();
            let gap = if he.len() == rs.len() {
                sup(rs.roots.iter().zip(&he).map(|(r, z)| r - scale * z))
            } else {
                f64::INFINITY
            };
            checks.push(Check::at_most(format!("hermite_bridge_p{p}"), gap, 1e-8));
        }
        per_p.push(json!({ "p": p, "expected_count": expected, "roots": rs.roots }));
    }
    let convention = match c.convention {
        FpConvention::Exp => "exp",
        FpConvention::Phi => "phi",
    };
    Ok(Outcome::single(t, checks, json!({ "convention": convention, "w_max": w_max, "roots": per_p })))
}

fn fp_ode(c: &FpOdeConfig) -> Result<Outcome, CliError> {
    let tol = c.tolerance.unwrap_or(1e-5);
    let ws = c.w_grid.points();
    let mut t = Table::new(&["p", "w", "fp", "residual"]);
    let mut checks = Vec::new();
    let mut res = Vec::new();
    for &p in &c.ps {
        let mut worst = 0.0f64;
        for &w in &ws {
            let r = ode_residual_fd(|x| fp(x, p), p, &[w], FP_ODE_STEP)?;
            worst = worst.max(r);
            t.push(vec![num(p), num(w), num(fp(w, p)?), num(r)]);
        }
        checks.push(Check::at_most(format!("ode_p{p}"), worst, tol));
        res.push(json!({ "p": p, "max_residual": worst }));
    }
    Ok(Outcome::single(t, checks, json!({ "step": FP_ODE_STEP, "residuals": res })))
}

fn dawson(c: &DawsonConfig) -> Result<Outcome, CliError> {
    let d = dawson_fourier_check(&c.w_grid.points())?;
    let mut t = Table::new(&["omega", "quadrature", "closed_form", "deviation"]);
    for i in 0..d.ws.len() {
        t.push(vec![
            num(d.ws[i]),
            num(d.quadrature[i]),
            num(d.closed_form[i]),
            num(d.quadrature[i] - d.closed_form[i]),
        ]);
    }
    let checks = vec![Check::at_most("fourier_identity", d.max_deviation, c.tolerance.unwrap_or(1e-8))];
    Ok(Outcome::single(t, checks, json!({ "max_deviation": d.max_deviation })))
}

fn abs_normal_moment(p: f64) -> f64 {
    (0.5 * p * 2f64.ln() + ln_gamma(0.5 * (p + 1.0))).exp() / PI.sqrt()
}

fn curve_checks(tag: &str, curve: &RiskCurve, checks: &mut Vec<Check>) {
    if let Some((_, a)) = curve.argmin() {
        checks.push(Check::flag(format!("argmin_{tag}"), (0.0..1.0).contains(&a), format!("argmin at a = {a}")));
    }
    let m = curve.monotone_tails();
    checks.push(Check::flag(
        format!("monotone_{tag}"),
        m.holds(),
        format!("nondecreasing on a >= 1: {}, nonincreasing on a <= 0: {}", m.above_one, m.below_zero),
    ));
}

fn risk(c: &RiskScanConfig, base: &Path, seed: Option<u64>) -> Result<Outcome, CliError> {
    let prior = c.prior.build(base)?;
    let grid = c.a_grid.points();
    let want_q = c.method != RiskMethodSpec::MonteCarlo;
    let want_mc = c.method != RiskMethodSpec::Quadrature;
    let mc = if want_mc {
        let seed = seed.ok_or_else(|| CliError::Usage("Monte Carlo risk needs a seed (config or --seed)".into()))?;
        Some(RiskMethod::MonteCarlo { samples: c.samples.unwrap_or(DEFAULT_MC_SAMPLES), seed })
    } else {
        None
    };
    let mut t = Table::new(&["p", "a", "quadrature", "monte_carlo", "stderr"]);
    let mut checks = Vec::new();
    let mut res = Vec::new();
    for &p in &c.ps {
        let q = if want_q { Some(risk_scan(&prior, p, &grid, RiskMethod::Quadrature)?) } else { None };
        let m = match mc {
            Some(method) => Some(risk_scan(&prior, p, &grid, method)?),
            None => None,
        };
        for (i, a) in grid.iter().enumerate() {
            let se = m.as_ref().and_then(|m| m.stderrs.as_ref().map(|s| s[i]));
            t.push(vec![
                num(p),
                num(*a),
                q.as_ref().map(|q| q.values[i]).into(),
                m.as_ref().map(|m| m.values[i]).into(),
                se.into(),
            ]);
        }
        let mut entry = json!({ "p": p });
        if let Some(q) = &q {
            curve_checks(&format!("quadrature_p{p}"), q, &mut checks);
            entry["argmin_quadrature"] = json!(q.argmin().map(|x| x.1));
            let d = risk_derivative(&prior, 1.0, p)?;
            let expect = p * abs_normal_moment(p);
            checks.push(Check::at_most(format!("derivative_at_one_p{p}"), (d - expect).abs() / expect, 1e-3));
            entry["derivative_at_one"] = json!(d);
            entry["derivative_at_one_expected"] = json!(expect);
        }
        if let Some(m) = &m {
            curve_checks(&format!("monte_carlo_p{p}"), m, &mut checks);
            entry["argmin_monte_carlo"] = json!(m.argmin().map(|x| x.1));
        }
        if let (Some(q), Some(m)) = (&q, &m) {
            let se = m.stderrs.as_ref().expect("Monte Carlo curves carry standard errors");
            let worst = (0..grid.len())
                .map(|i| (m.values[i] - q.values[i]).abs() / (3.0 * se[i] + 1e-10 * q.values[i].abs().max(1.0)))
                .fold(0.0f64, f64::max);
            checks.push(
                Check::at_most(format!("mc_agreement_p{p}"), worst, 1.0)
                    .with_detail("max |mc - quad| / (3 se + 1e-10 max(1, |quad|))"),
            );
            entry["mc_max_band_ratio"] = json!(worst);
        }
        res.push(entry);
    }
    let method = match mc {
        Some(RiskMethod::MonteCarlo { samples, seed }) => {
            json!({ "name": c.method_name(), "samples": samples, "seed": seed })
        }
        _ => json!({ "name": c.method_name() }),
    };
    Ok(Outcome::single(t, checks, json!({ "prior": prior.kind(), "method": method, "scans": res })))
}

impl RiskScanConfig {
    fn method_name(&self) -> &'static str {
        match self.method {
            RiskMethodSpec::Quadrature => "quadrature",
            RiskMethodSpec::MonteCarlo => "monte-carlo",
            RiskMethodSpec::Both => "both",
        }
    }
}

#[derive(serde::Deserialize)]
struct PoissonFixture {
    alpha: f64,
    beta: f64,
    rows: Vec<PoissonRow>,
}

#[derive(serde::Deserialize)]
struct PoissonRow {
    y: u32,
    median: f64,
    difference: f64,
}

fn poisson(c: &PoissonConfig, base: &Path) -> Result<Outcome, CliError> {
    let tol = c.tolerance.unwrap_or(1e-6);
    let prior = Prior::gamma(c.alpha, c.beta)?;
    let mut t = Table::new(&["y", "mean", "median", "difference", "median_closed_form"]);
    let mut rows = Vec::new();
    let mut closed_gap = 0.0f64;
    for y in 0..=c.y_max {
        let post = posterior(&prior, &NoiseModel::Poisson, y as f64)?;
        let (mean, median) = (cond_mean(&post), cond_median(&post));
        let closed = inv_lower_gamma(c.alpha + y as f64, 0.5)? / (c.beta + 1.0);
        closed_gap = closed_gap.max((median - closed).abs());
        t.push(vec![Cell::Int(y as i64), num(mean), num(median), num(median - mean), num(closed)]);
        rows.push((y, mean, median));
    }
    let mut checks = vec![Check::at_most("closed_form", closed_gap, tol)];
    let mut results = json!({ "alpha": c.alpha, "beta": c.beta, "max_closed_form_gap": closed_gap });
    if let Some(r) = &c.reference {
        let path = base.join(r);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read reference {}: {e}", path.display())))?;
        let fx: PoissonFixture = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad reference {}: {e}", path.display())))?;
        if fx.alpha != c.alpha || fx.beta != c.beta {
            return Err(CliError::Usage(format!("reference is for (alpha, beta) = ({}, {})", fx.alpha, fx.beta)));
        }
        let (mut med_gap, mut diff_gap, mut n) = (0.0f64, 0.0f64, 0);
        for (y, mean, median) in &rows {
            if let Some(ref_row) = fx.rows.iter().find(|r| r.y == *y) {
                med_gap = med_gap.max((median - ref_row.median).abs());
                diff_gap = diff_gap.max((median - mean - ref_row.difference).abs());
                n += 1;
            }
        }
        checks.push(Check::at_most("reference_medians", med_gap, tol).with_detail(format!("{n} tabulated rows")));
        checks.push(Check::at_most("reference_differences", diff_gap, tol));
        results["reference_rows"] = json!(n);
        results["max_reference_median_gap"] = json!(med_gap);
    }
    if let Some([lo, hi]) = c.difference_range {
        let (dmin, dmax) = rows
            .iter()
            .map(|(_, mean, median)| median - mean)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));
        checks.push(Check::flag(
            "difference_range",
            dmin >= lo && dmax <= hi,
            format!("median - mean in [{dmin}, {dmax}]"),
        ));
        results["difference_min"] = json!(dmin);
        results["difference_max"] = json!(dmax);
    }
    Ok(Outcome::single(t, checks, results))
}

fn counterexample_density(c: &CounterexampleDensityConfig) -> Result<Outcome, CliError> {
    let nodes = c.nodes.unwrap_or(DEFAULT_GRID_NODES);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut checks = Vec::new();
    let mut res = Vec::new();
    let ys = c.y_grid.map(|g| g.points()).unwrap_or_else(|| linspace(-4.0, 4.0, 17));
    for (i, &theta) in c.thetas.iter().enumerate() {
        let params = CounterexampleParams { a: c.a, rho: c.rho, theta, omega: c.omega };
        let prior = counterexample_prior_with_nodes(params, nodes)?;
        let Prior::Grid(g) = &prior else { unreachable!("counterexample priors are gridded") };
        xs = g.nodes().to_vec();
        cols.push(g.values().to_vec());
        let (mean, var) = prior_moments(&prior)?;
        let mut entry = json!({ "column": format!("density_{i}"), "theta": theta, "mean": mean, "variance": var });
        if theta == 0.0 {
            let closed = params.variance_theta0();
            checks.push(Check::at_most(format!("variance_theta{i}"), (var - closed).abs(), 1e-8));
            entry["variance_closed_form"] = json!(closed);
        }
        if let Some(p) = c.verify_p {
            let r = lp_linearity_residual(&prior, c.a, p, &ys)?;
            checks.push(Check::at_most(
                format!("lp_linearity_theta{i}"),
                r.sup_norm,
                c.tolerance.unwrap_or(DEFAULT_TOLERANCE),
            ));
            entry["lp_sup_norm"] = json!(r.sup_norm);
        }
        res.push(entry);
    }
    let mut header = vec!["x".to_string()];
    header.extend((0..cols.len()).map(|i| format!("density_{i}")));
    let mut t = Table { header, rows: Vec::new() };
    for (k, x) in xs.iter().enumerate() {
        let mut row = vec![num(*x)];
        row.extend(cols.iter().map(|col| num(col[k])));
        t.push(row);
    }
    let results = json!({ "a": c.a, "rho": c.rho, "omega": c.omega, "nodes": nodes, "densities": res });
    Ok(Outcome::single(t, checks, results))
}

fn symmetry(c: &SymmetryConfig, base: &Path) -> Result<Outcome, CliError> {
    let prior = c.prior.build(base)?;
    let mut t = Table::new(&["y", "moment", "derivative", "route_gap"]);
    let (mut kmax, mut gap) = (0.0f64, 0.0f64);
    for y in c.y_grid.points() {
        let r = third_cumulant_routes(&prior, y)?;
        kmax = kmax.max(r.moment.abs());
        gap = gap.max((r.moment - r.derivative).abs());
        t.push(vec![num(y), num(r.moment), num(r.derivative), num(r.moment - r.derivative)]);
    }
    let mut checks = vec![Check::at_most("route_agreement", gap, c.route_tolerance.unwrap_or(1e-4))];
    checks.push(match c.expect {
        SymmetryExpectation::Symmetric => Check::at_most("symmetric", kmax, c.tolerance.unwrap_or(1e-6)),
        SymmetryExpectation::Asymmetric => Check::at_least("asymmetric", kmax, c.asymmetry_threshold.unwrap_or(1e-3)),
    });
    Ok(Outcome::single(t, checks, json!({ "max_abs_third_cumulant": kmax, "max_route_gap": gap })))
}
