use linmed_core::quad::{integrate, QuadOptions};
use linmed_core::specfun::{dawson, erf_complex, hermite_zeros, inv_lower_gamma, reg_lower_gamma};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dawson_ode_residual(x: f64) -> f64 {
    let h = 1e-5;
    let d1 = (dawson(x + h).unwrap() - dawson(x - h).unwrap()) / (2.0 * h);
    d1 + 2.0 * x * dawson(x).unwrap() - 1.0
}

fn erf_by_quadrature(x: f64) -> f64 {
    let two_over_sqrt_pi = 2.0 / std::f64::consts::PI.sqrt();
    integrate(|t: f64| two_over_sqrt_pi * (-t * t).exp(), 0.0, x, &[], QuadOptions::tol(1e-15, 1e-14)).unwrap().value
}

#[test]
fn dawson_ode_at_ten_thousand_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x: f64 = rng.random_range(-40.0..40.0);
        worst = worst.max(dawson_ode_residual(x).abs());
    }
    assert!(worst <= 1e-8, "worst residual {worst:e}");
}

#[test]
fn hermite_zeros_interlace() {
    for n in 1..=20 {
        let lo = hermite_zeros(n).unwrap().roots;
        let hi = hermite_zeros(n + 1).unwrap().roots;
        assert_eq!(lo.len(), n);
        assert_eq!(hi.len(), n + 1);
        for i in 0..n {
            assert!(hi[i] < lo[i] && lo[i] < hi[i + 1], "n={n} i={i}");
        }
    }
}

#[test]
fn inverse_gamma_round_trip_table() {
    for s in [0.5, 1.0, 2.0, 11.0, 51.0] {
        for p in [0.1, 0.5, 0.9] {
            let x = inv_lower_gamma(s, p).unwrap();
            let back = reg_lower_gamma(s, x).unwrap();
            assert!((back - p).abs() <= 1e-10, "s={s} p={p}: {back}");
        }
    }
}

proptest! {
    #[test]
    fn dawson_ode(x in -60.0f64..60.0) {
        prop_assert!(dawson_ode_residual(x).abs() <= 1e-8);
    }

    #[test]
    fn dawson_is_odd(x in -50.0f64..50.0) {
        prop_assert_eq!(dawson(-x).unwrap(), -dawson(x).unwrap());
    }

    #[test]
    fn erf_real_axis(x in -6.0f64..6.0) {
        let v = erf_complex(Complex64::new(x, 0.0)).unwrap();
        prop_assert!(v.im.abs() <= 1e-10);
        prop_assert!((v.re - erf_by_quadrature(x)).abs() <= 1e-10, "x={} {}", x, v.re);
    }

    #[test]
    fn erf_conjugate_symmetry(re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let z = Complex64::new(re, im);
        let a = erf_complex(z.conj()).unwrap();
        let b = erf_complex(z).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn inverse_gamma_round_trip(s in 0.3f64..120.0, p in 0.01f64..0.99) {
        let x = inv_lower_gamma(s, p).unwrap();
        prop_assert!((reg_lower_gamma(s, x).unwrap() - p).abs() <= 1e-10);
    }
}
