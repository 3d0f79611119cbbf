mod common;

use std::f64::consts::PI;

use garmagarch::specfun::{
    bessel_k, digamma, inv_digamma, inv_trigamma, ln_bessel_k, ln_gamma, pentagamma, polygamma,
    tetragamma, trigamma, PolygammaOrder, EULER_GAMMA,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn ln_gamma_known_values() {
    assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
    assert!((ln_gamma(0.5).unwrap() - 0.5 * PI.ln()).abs() < 1e-14);
    assert!((ln_gamma(10.0).unwrap() - 362880f64.ln()).abs() < 1e-12);
    assert!(ln_gamma(0.0).is_err());
    assert!(ln_gamma(-2.5).is_err());
    assert!(ln_gamma(f64::NAN).is_err());
}

#[test]
fn ln_gamma_matches_libm_over_range() {
    let mut z = 1e-6;
    while z < 1e6 {
        let ours = ln_gamma(z).unwrap();
        let oracle = libm::lgamma(z);
        assert!(
            (ours - oracle).abs() <= 1e-12 * oracle.abs(),
            "z = {z}: {ours} vs {oracle}"
        );
        z *= 1.37;
    }
    // relative accuracy next to the zeros at 1 and 2
    for &d in &[1e-9, -1e-9, 1e-5, -3e-4, 0.01, -0.2, 0.37] {
        for base in [1.0, 2.0] {
            let z = base + d;
            let oracle = libm::lgamma(z);
            assert!(rel(ln_gamma(z).unwrap(), oracle) < 1e-12, "z = {z}");
        }
    }
}

#[test]
fn polygamma_known_values() {
    let p = |m, z| polygamma(PolygammaOrder::new(m).unwrap(), z).unwrap();
    assert!((p(0, 1.0) + EULER_GAMMA).abs() < 1e-14);
    assert!(rel(p(1, 1.0), PI * PI / 6.0) < 1e-13);
    assert!(rel(p(3, 1.0), PI.powi(4) / 15.0) < 1e-12);
    // ψ₂(1) = −2ζ(3)
    assert!(rel(p(2, 1.0), -2.0 * 1.202_056_903_159_594_2) < 1e-12);
    assert!(PolygammaOrder::new(4).is_err());
    assert!(polygamma(PolygammaOrder::DIGAMMA, 0.0).is_err());
}

#[test]
fn trigamma_at_100_matches_series() {
    let oracle = common::trigamma_series(100.0, 1_000_000);
    assert!(
        rel(trigamma(100.0), oracle) < 1e-12,
        "{} vs {oracle}",
        trigamma(100.0)
    );
}

/// A polygamma function and the constant in its unit-shift recurrence.
type Shift = (fn(f64) -> f64, f64);

#[test]
fn recurrence_on_grid() {
    let fns: [Shift; 4] = [
        (digamma, 1.0),
        (trigamma, -1.0),
        (tetragamma, 2.0),
        (pentagamma, -6.0),
    ];
    for (m, (f, c)) in fns.iter().enumerate() {
        let mut z = 0.1;
        while z <= 50.0 {
            let lhs = f(z + 1.0) - f(z);
            let rhs = c / z.powi(m as i32 + 1);
            assert!(
                (lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0),
                "m = {m}, z = {z}: {lhs} vs {rhs}"
            );
            z += 0.173;
        }
    }
}

#[test]
fn monotonicity_on_grid() {
    let grid: Vec<f64> = (1..2000).map(|i| i as f64 * 0.025).collect();
    for w in grid.windows(2) {
        assert!(digamma(w[1]) > digamma(w[0]));
        assert!(trigamma(w[1]) < trigamma(w[0]));
    }
}

#[test]
fn inv_trigamma_examples() {
    assert!((inv_trigamma(PI * PI / 6.0).unwrap() - 1.0).abs() < 1e-10);
    assert!((inv_trigamma(trigamma(2.5)).unwrap() - 2.5).abs() < 1e-10);
    let oracle = common::bisect(|c| trigamma(c) - 0.01, 1.0, 1e4);
    let c = inv_trigamma(0.01).unwrap();
    assert!((c - oracle).abs() < 1e-8 * oracle, "{c} vs {oracle}");
    assert!((c - 100.5).abs() < 0.01);
    assert!(inv_trigamma(0.0).is_err());
}

#[test]
fn inv_trigamma_round_trip_grid() {
    let mut v: f64 = 1e-4;
    while v <= 1e3 {
        let c = inv_trigamma(v).unwrap();
        assert!(rel(trigamma(c), v) < 1e-9, "v = {v}");
        v *= 1.11;
    }
}

#[test]
fn bessel_examples_against_quadrature() {
    let closed = (PI / 4.0).sqrt() * (-2.0f64).exp();
    assert!(rel(bessel_k(0.5, 2.0).unwrap(), closed) < 1e-10);
    assert!((closed - 0.119_937_772_0).abs() < 1e-10);
    for &(order, x) in &[
        (1.0, 1.0),
        (3.5, 10.0),
        (0.0, 0.5),
        (2.25, 3.0),
        (7.5, 0.3),
        (20.0, 5.0),
    ] {
        let oracle = common::bessel_k_trapezoid(order, x);
        assert!(
            rel(bessel_k(order, x).unwrap(), oracle) < 1e-9,
            "K_{order}({x})"
        );
    }
    assert!((bessel_k(1.0, 1.0).unwrap() - 0.601_907_230_2).abs() < 1e-10);
}

#[test]
fn bessel_half_integer_closed_forms() {
    for &x in &[1e-3, 0.1, 1.0, 7.0, 40.0, 300.0] {
        let base = (PI / (2.0 * x)).sqrt() * (-x).exp();
        let k15 = base * (1.0 + 1.0 / x);
        let k25 = base * (1.0 + 3.0 / x + 3.0 / (x * x));
        let ln_base = 0.5 * (PI / (2.0 * x)).ln() - x;
        assert!((ln_bessel_k(0.5, x).unwrap() - ln_base).abs() < 1e-10 * ln_base.abs().max(1.0));
        assert!(
            (ln_bessel_k(1.5, x).unwrap() - k15.ln()).abs() < 1e-10 * k15.ln().abs().max(1.0),
            "x = {x}"
        );
        assert!(
            (ln_bessel_k(2.5, x).unwrap() - k25.ln()).abs() < 1e-10 * k25.ln().abs().max(1.0),
            "x = {x}"
        );
    }
}

#[test]
fn bessel_large_argument_uses_log_scale() {
    // K_{1/2}(1000) underflows; its log does not
    let l = ln_bessel_k(0.5, 1000.0).unwrap();
    assert!((l - (0.5 * (PI / 2000.0).ln() - 1000.0)).abs() < 1e-10 * 1000.0);
    assert!(bessel_k(0.5, -1.0).is_err());
}

#[test]
fn inv_digamma_round_trip() {
    for &x in &[1e-3, 0.2, 1.0, 3.7, 50.0, 1e4] {
        assert!(rel(inv_digamma(digamma(x)).unwrap(), x) < 1e-10, "x = {x}");
    }
}

proptest! {
    #[test]
    fn bessel_symmetric_in_order(order in 0.0f64..30.0, x in 1e-2f64..200.0) {
        let a = ln_bessel_k(order, x).unwrap();
        let b = ln_bessel_k(-order, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn bessel_order_recurrence(order in 0.0f64..50.0, x in 1e-2f64..100.0) {
        // K_{ν+1} = K_{ν−1} + (2ν/x) K_ν, in logs relative to K_ν
        let l0 = ln_bessel_k(order - 1.0, x).unwrap();
        let l1 = ln_bessel_k(order, x).unwrap();
        let l2 = ln_bessel_k(order + 1.0, x).unwrap();
        let rhs = (l0 - l1).exp() + 2.0 * order / x;
        prop_assert!(((l2 - l1).exp() - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn inv_trigamma_round_trip(v in 1e-4f64..1e3) {
        let c = inv_trigamma(v).unwrap();
        prop_assert!(rel(trigamma(c), v) < 1e-9);
    }
}
