//! Independent oracles shared by the integration tests. None of these call
//! into the crate's numerical code paths they are used to check.

#![allow(dead_code)]

use garmagarch::engine::Presample;
use garmagarch::ParamVector;

/// K_ν(x) = ∫₀^∞ cosh(νu) e^{−x cosh u} du, by the trapezoidal rule with a
/// small step. The integrand decays double-exponentially, so the rule is
/// spectrally accurate.
pub fn bessel_k_trapezoid(order: f64, x: f64) -> f64 {
    let h = 1e-3;
    let mut sum = 0.5 * (-x).exp();
    let mut u = h;
    loop {
        let term = (order * u - x * u.cosh()).exp() * 0.5 * (1.0 + (-2.0 * order * u).exp());
        sum += term;
        if u > 1.0 && term < 1e-300_f64.max(sum * 1e-18) {
            break;
        }
        u += h;
    }
    sum * h
}

/// ψ₁(z) = Σ_k 1/(z+k)² truncated after `n` terms, with the tail
/// approximated by 1/(z + n − ½) (error O((z+n)^−3)).
pub fn trigamma_series(z: f64, n: usize) -> f64 {
    let mut s = 0.0;
    // sum smallest terms first
    for k in (0..n).rev() {
        let d = z + k as f64;
        s += 1.0 / (d * d);
    }
    s + 1.0 / (z + n as f64 - 0.5)
}

/// Bisection for a root of a function with f(lo) and f(hi) of opposite sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Student-t log density with ν degrees of freedom, location ξ and scale s
/// (density of ξ + s·T_ν).
pub fn student_t_log_density(dof: f64, location: f64, scale: f64, y: f64) -> f64 {
    let z = (y - location) / scale;
    libm::lgamma(0.5 * (dof + 1.0))
        - libm::lgamma(0.5 * dof)
        - 0.5 * (dof * std::f64::consts::PI).ln()
        - scale.ln()
        - 0.5 * (dof + 1.0) * (1.0 + z * z / dof).ln()
}

/// Hand-unrolled GARMA(1,1)-GARCH(1,1) recursion for three observations
/// from an explicit pre-sample state; `e0_sq` is the pre-sample ε², which
/// differs from ε₀² when the pre-sample is set to unconditional values.
/// Returns (μ, σ², ε).
pub fn unrolled_three_steps(
    theta: &ParamVector,
    h: [f64; 3],
    pre: &Presample,
    e0_sq: f64,
) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (c, phi, delta) = (theta.arma.intercept, theta.arma.ar[0], theta.arma.ma[0]);
    let g = theta.garch.as_ref().unwrap();
    let (w, a, b) = (g.omega, g.alpha[0], g.beta[0]);
    let (h0, e0, s0) = (pre.h[0], pre.eps[0], pre.sigma2[0]);

    let mu1 = c + phi * h0 + delta * e0;
    let s1 = w + a * e0_sq + b * s0;
    let e1 = h[0] - mu1;

    let mu2 = c + phi * h[0] + delta * e1;
    let s2 = w + a * e1 * e1 + b * s1;
    let e2 = h[1] - mu2;

    let mu3 = c + phi * h[1] + delta * e2;
    let s3 = w + a * e2 * e2 + b * s2;
    let e3 = h[2] - mu3;

    ([mu1, mu2, mu3], [s1, s2, s3], [e1, e2, e3])
}

/// B_k by explicit triple loops over dense row-major arrays.
pub fn bk_brute_force(a: &[Vec<f64>], a1: &[Vec<f64>], k_max: usize) -> Vec<Vec<Vec<f64>>> {
    let r = a.len();
    let mut b: Vec<Vec<f64>> = (0..r)
        .map(|i| (0..r).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let quad = |m: &[Vec<f64>], b: &[Vec<f64>]| {
        // m' b m
        let mut out = vec![vec![0.0; r]; r];
        for i in 0..r {
            for j in 0..r {
                let mut s = 0.0;
                for k in 0..r {
                    for l in 0..r {
                        s += m[k][i] * b[k][l] * m[l][j];
                    }
                }
                out[i][j] = s;
            }
        }
        out
    };
    let mut all = Vec::new();
    for _ in 0..k_max {
        let x = quad(a, &b);
        let y = quad(a1, &b);
        b = (0..r)
            .map(|i| (0..r).map(|j| x[i][j] + 5.0 * y[i][j]).collect())
            .collect();
        all.push(b.clone());
    }
    all
}

/// Upper-tail probability of a chi-square variable, by the regularized
/// incomplete gamma function computed with its series / continued fraction.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    let a = 0.5 * df;
    let z = 0.5 * x;
    if z <= 0.0 {
        return 1.0;
    }
    let ln_pre = a * z.ln() - z - libm::lgamma(a);
    if z < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..10_000 {
            n += 1.0;
            term *= z / n;
            sum += term;
            if term < sum * 1e-16 {
                break;
            }
        }
        1.0 - sum * ln_pre.exp()
    } else {
        // Lentz continued fraction for Q(a, z)
        let tiny = 1e-300;
        let mut b = z + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        ln_pre.exp() * h
    }
}
