use linmed_core::grid::linspace;
use linmed_core::models::{matched_gaussian_prior, GridDensity, Prior};
use linmed_core::risk::{bayes_risk, risk_scan, shifted_abs_moment, RiskMethod};
use linmed_core::specfun::ln_gamma;
use proptest::prelude::*;

/// `E|Z - c|^p = 2^{p/2} Γ((p+1)/2) π^{-1/2} ₁F₁(-p/2; 1/2; -c²/2)`, with
/// the series evaluated after Kummer's transformation.
fn shifted_moment_oracle(c: f64, p: f64) -> f64 {
    let (a, b, z) = (0.5 + 0.5 * p, 0.5, 0.5 * c * c);
    let (mut term, mut sum) = (1.0, 1.0);
    for n in 0..2000 {
        let n = n as f64;
        term *= (a + n) / (b + n) * z / (n + 1.0);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    (0.5 * p * 2f64.ln() + ln_gamma(a) - z).exp() * sum / std::f64::consts::PI.sqrt()
}

fn gamma_grid() -> Prior {
    Prior::Grid(GridDensity::from_fn(0.0, 30.0, 4001, |x| x * x * (-x).exp()).unwrap())
}

#[test]
fn matched_prior_minimizer_is_the_matched_slope() {
    let grid = linspace(-0.5, 1.5, 41);
    for a_star in [0.25, 0.5, 0.75] {
        let prior = matched_gaussian_prior(a_star).unwrap();
        for p in [1.0, 2.0] {
            let c = risk_scan(&prior, p, &grid, RiskMethod::Quadrature).unwrap();
            let (_, a) = c.argmin().unwrap();
            assert!((a - a_star).abs() <= 0.05 + 1e-12, "a*={a_star} p={p}: {a}");
        }
    }
}

#[test]
fn admissible_interval_for_quadrature_scans() {
    let grid = linspace(-0.5, 1.5, 41);
    let priors = [Prior::gaussian(0.0, 1.0).unwrap(), Prior::two_point(-1.0, 1.0, 0.5).unwrap(), gamma_grid()];
    for prior in &priors {
        for p in [1.0, 1.5, 2.0, 4.0] {
            let c = risk_scan(prior, p, &grid, RiskMethod::Quadrature).unwrap();
            let (_, a) = c.argmin().unwrap();
            assert!((0.0..1.0).contains(&a), "{} p={p}: argmin {a}", prior.kind());
            assert!(c.monotone_tails().holds(), "{} p={p}", prior.kind());
            assert!(c.values.iter().all(|v| *v >= 0.0));
        }
    }
}

#[test]
fn grid_prior_agrees_with_gamma_prior() {
    let gridded = gamma_grid();
    let exact = Prior::gamma(3.0, 1.0).unwrap();
    for a in [0.0, 0.4, 1.2] {
        let g = bayes_risk(&gridded, a, 1.5, RiskMethod::Quadrature).unwrap().value;
        let e = bayes_risk(&exact, a, 1.5, RiskMethod::Quadrature).unwrap().value;
        assert!((g - e).abs() <= 1e-8 * e, "a={a}: {g} vs {e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shifted_moment_matches_series(c in -6.0f64..6.0, p in 1.0f64..5.0) {
        let q = shifted_abs_moment(c, p);
        let o = shifted_moment_oracle(c, p);
        prop_assert!((q - o).abs() <= 1e-11 * o, "{} vs {}", q, o);
    }

    #[test]
    fn gaussian_risk_is_folded_moment(var in 0.1f64..4.0, a in -1.0f64..2.0, p in 1.0f64..4.0) {
        // (1-a)X - aZ ~ N(0, s²) and E|N(0, s²)|^p = s^p E|Z|^p.
        let v = bayes_risk(&Prior::gaussian(0.0, var).unwrap(), a, p, RiskMethod::Quadrature).unwrap().value;
        let s = ((1.0 - a) * (1.0 - a) * var + a * a).sqrt();
        let e = s.powf(p) * shifted_moment_oracle(0.0, p);
        prop_assert!((v - e).abs() <= 1e-10 * e.max(1.0), "{} vs {}", v, e);
    }

    #[test]
    fn risk_is_convex_in_the_slope(a in -0.5f64..1.5, h in 0.01f64..0.3, p in 1.0f64..4.0) {
        let prior = Prior::two_point(-0.7, 1.4, 0.4).unwrap();
        let f = |t: f64| bayes_risk(&prior, t, p, RiskMethod::Quadrature).unwrap().value;
        prop_assert!(f(a - h) + f(a + h) - 2.0 * f(a) >= -1e-11);
    }

    #[test]
    fn monte_carlo_standard_errors_are_finite(seed in any::<u64>(), p in 1.0f64..4.0) {
        let prior = Prior::gaussian(0.5, 1.0).unwrap();
        let c = risk_scan(&prior, p, &[0.0, 0.5, 1.0], RiskMethod::MonteCarlo { samples: 5000, seed }).unwrap();
        let se = c.stderrs.unwrap();
        prop_assert!(se.iter().all(|s| s.is_finite() && *s > 0.0));
        prop_assert!(c.values.iter().all(|v| *v >= 0.0));
    }
}
