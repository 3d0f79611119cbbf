//! Adaptive Gauss–Legendre quadrature on finite intervals.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 40;

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1],
/// from Newton's method on the Legendre polynomial P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// ∫_a^b f(x) dx to within `max(abs_tol, rel_tol * |value|)`.
///
/// Each panel is compared against the sum of its two halves and split
/// recursively where they disagree.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(
            "integrate",
            format!("interval [{a}, {b}] must be finite"),
        ));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let whole = panel(&f, a, b);
    let mut evaluations = ORDER;
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut value = 0.0;
    let mut error_estimate = 0.0;
    let scale = whole.abs();
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(&f, lo, mid);
        let right = panel(&f, mid, hi);
        evaluations += 2 * ORDER;
        let refined = left + right;
        let diff = (refined - est).abs();
        if !refined.is_finite() {
            return Err(Error::Numerical(format!(
                "integrand not finite on [{lo}, {hi}]"
            )));
        }
        let width_share = (hi - lo) / (b - a).abs();
        let allowed = abs_tol.max(rel_tol * scale) * width_share.max(1e-12);
        if diff <= allowed || depth >= MAX_DEPTH {
            value += refined;
            error_estimate += diff;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(Quadrature {
        value,
        error_estimate,
        evaluations,
    })
}
