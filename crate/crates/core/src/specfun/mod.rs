//! Scalar special functions: log-gamma, polygamma of orders 0 to 3, the
//! inverse digamma and trigamma functions, and the modified Bessel function
//! of the third kind.
//!
//! Gamma-family functions shift the argument upward with the recurrence
//! `ψ_m(z + 1) = ψ_m(z) + (-1)^m m! / z^(m+1)` until `z >= 10` and then
//! evaluate the Stirling-type asymptotic expansion.

mod bessel;

pub use bessel::{bessel_k, ln_bessel_k, ln_bessel_k_with_ratio};

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument the recurrence is applied before the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// Bernoulli numbers B_2, B_4, ..., B_20.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Order `m` of a polygamma function: the (m+1)-th derivative of `ln Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolygammaOrder(u8);

impl PolygammaOrder {
    pub const DIGAMMA: Self = Self(0);
    pub const TRIGAMMA: Self = Self(1);
    pub const TETRAGAMMA: Self = Self(2);
    pub const PENTAGAMMA: Self = Self(3);

    pub fn new(m: u32) -> Result<Self> {
        if m <= 3 {
            Ok(Self(m as u8))
        } else {
            Err(Error::domain(
                "polygamma",
                format!("order {m} not supported (0..=3)"),
            ))
        }
    }

    pub fn get(self) -> u32 {
        self.0 as u32
    }
}

/// ψ, ψ₁, ψ₂, ψ₃ evaluated at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polygammas {
    pub digamma: f64,
    pub trigamma: f64,
    pub tetragamma: f64,
    pub pentagamma: f64,
}

impl Polygammas {
    /// All four orders from a single recurrence shift. `z` must be positive;
    /// otherwise every field is NaN.
    pub fn at(z: f64) -> Self {
        if !(z > 0.0) || !z.is_finite() {
            return Self {
                digamma: f64::NAN,
                trigamma: f64::NAN,
                tetragamma: f64::NAN,
                pentagamma: f64::NAN,
            };
        }
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        let mut x = z;
        while x < ASYMPTOTIC_THRESHOLD {
            let inv = 1.0 / x;
            let inv2 = inv * inv;
            s1 += inv;
            s2 += inv2;
            s3 += inv2 * inv;
            s4 += inv2 * inv2;
            x += 1.0;
        }

        let inv = 1.0 / x;
        let w = inv * inv;
        // Horner sums of B_2k c_k w^(k-1) for the four orders.
        let (mut a0, mut a1, mut a2, mut a3) = (0.0, 0.0, 0.0, 0.0);
        for (i, &b) in BERNOULLI.iter().enumerate().rev() {
            let two_k = 2.0 * (i as f64 + 1.0);
            a0 = a0 * w + b / two_k;
            a1 = a1 * w + b;
            a2 = a2 * w + b * (two_k + 1.0);
            a3 = a3 * w + b * (two_k + 1.0) * (two_k + 2.0);
        }
        let inv2 = w;
        let inv3 = inv2 * inv;
        let inv4 = inv2 * inv2;

        let psi0 = x.ln() - 0.5 * inv - a0 * inv2;
        let psi1 = inv + 0.5 * inv2 + a1 * inv3;
        let psi2 = -(inv2 + inv3 + a2 * inv4);
        let psi3 = 2.0 * inv3 + 3.0 * inv4 + a3 * inv4 * inv;

        Self {
            digamma: psi0 - s1,
            trigamma: psi1 + s2,
            tetragamma: psi2 - 2.0 * s3,
            pentagamma: psi3 + 6.0 * s4,
        }
    }

    pub fn order(&self, m: PolygammaOrder) -> f64 {
        match m.0 {
            0 => self.digamma,
            1 => self.trigamma,
            2 => self.tetragamma,
            _ => self.pentagamma,
        }
    }
}

fn check_positive(function: &'static str, z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            function,
            format!("argument must be positive and finite, got {z}"),
        ))
    }
}

/// Natural logarithm of Γ(z) for z > 0.
pub fn ln_gamma(z: f64) -> Result<f64> {
    check_positive("ln_gamma", z)?;
    Ok(ln_gamma_unchecked(z))
}

/// ζ(k) − 1 for k = 2..=SERIES_TERMS + 1, by direct summation to n = 63
/// plus an Euler–Maclaurin tail.
fn zeta_minus_one() -> &'static [f64; SERIES_TERMS] {
    static TABLE: OnceLock<[f64; SERIES_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [0.0; SERIES_TERMS];
        let n = 64.0_f64;
        for (i, v) in out.iter_mut().enumerate() {
            let k = (i + 2) as f64;
            let head: f64 = (2..64).rev().map(|j| (j as f64).powf(-k)).sum();
            let tail = n.powf(1.0 - k) / (k - 1.0) + 0.5 * n.powf(-k) + k * n.powf(-k - 1.0) / 12.0
                - k * (k + 1.0) * (k + 2.0) * n.powf(-k - 3.0) / 720.0
                + k * (k + 1.0) * (k + 2.0) * (k + 3.0) * (k + 4.0) * n.powf(-k - 5.0) / 30240.0;
            *v = head + tail;
        }
        out
    })
}

const SERIES_TERMS: usize = 30;

/// ln Γ(2 + x) = (1 − γ)x + Σ_{k≥2} (−1)^k (ζ(k) − 1) x^k / k for |x| ≤ ½.
/// Accurate to full relative precision near the zero at x = 0.
fn ln_gamma_two_plus(x: f64) -> f64 {
    let z = zeta_minus_one();
    let mut sum = 0.0;
    for k in (2..SERIES_TERMS + 2).rev() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum = sum * x + sign * z[k - 2] / k as f64;
    }
    x * (1.0 - EULER_GAMMA) + sum * x * x
}

pub(crate) fn ln_gamma_unchecked(z: f64) -> f64 {
    // Near the zeros at 1 and 2, shifting up and subtracting logarithms
    // loses relative accuracy; use the series about 2 instead.
    if (0.5..1.5).contains(&z) {
        let x = z - 1.0;
        return ln_gamma_two_plus(x) - x.ln_1p();
    }
    if (1.5..2.5).contains(&z) {
        return ln_gamma_two_plus(z - 2.0);
    }
    let mut x = z;
    let mut prod = 1.0;
    while x < ASYMPTOTIC_THRESHOLD {
        prod *= x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let w = inv * inv;
    let mut series = 0.0;
    for (i, &b) in BERNOULLI.iter().enumerate().rev() {
        let two_k = 2.0 * (i as f64 + 1.0);
        series = series * w + b / (two_k * (two_k - 1.0));
    }
    let stirling = (x - 0.5) * x.ln() - x + HALF_LN_2PI + series * inv;
    stirling - prod.ln()
}

/// Polygamma function ψ_m(z) for m in 0..=3.
pub fn polygamma(m: PolygammaOrder, z: f64) -> Result<f64> {
    check_positive("polygamma", z)?;
    Ok(Polygammas::at(z).order(m))
}

/// ψ(z); NaN outside z > 0.
pub fn digamma(z: f64) -> f64 {
    Polygammas::at(z).digamma
}

/// ψ₁(z); NaN outside z > 0.
pub fn trigamma(z: f64) -> f64 {
    Polygammas::at(z).trigamma
}

/// ψ₂(z); NaN outside z > 0.
pub fn tetragamma(z: f64) -> f64 {
    Polygammas::at(z).tetragamma
}

/// ψ₃(z); NaN outside z > 0.
pub fn pentagamma(z: f64) -> f64 {
    Polygammas::at(z).pentagamma
}

/// Solves ψ₁(c) = v for c > 0.
///
/// ψ₁ is strictly decreasing and convex, and satisfies
/// `1/c + 1/(2c²) < ψ₁(c) < 1/c + 1/c²`, which brackets the root tightly.
/// Newton's method started from the left end of the bracket increases
/// monotonically towards the root; a bisection step is taken whenever the
/// iterate leaves the bracket.
pub fn inv_trigamma(v: f64) -> Result<f64> {
    check_positive("inv_trigamma", v)?;
    let mut lo = (1.0 + (1.0 + 2.0 * v).sqrt()) / (2.0 * v);
    let mut hi = (1.0 + (1.0 + 4.0 * v).sqrt()) / (2.0 * v);
    let tol = 1e-13 * v.max(1.0);
    let mut c = lo;
    for _ in 0..100 {
        let pg = Polygammas::at(c);
        let resid = pg.trigamma - v;
        if resid.abs() <= tol {
            return Ok(c);
        }
        if resid > 0.0 {
            lo = lo.max(c);
        } else {
            hi = hi.min(c);
        }
        let step = resid / pg.tetragamma;
        let mut next = c - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - c).abs() <= 4.0 * f64::EPSILON * c {
            return Ok(next);
        }
        c = next;
    }
    let resid = trigamma(c) - v;
    if resid.abs() <= 1e-10 * v.max(1.0) {
        Ok(c)
    } else {
        Err(Error::Numerical(format!(
            "inv_trigamma({v}) did not converge (last c = {c}, residual {resid})"
        )))
    }
}

/// Solves ψ(x) = y for x > 0 by safeguarded Newton iteration.
pub fn inv_digamma(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::domain(
            "inv_digamma",
            format!("non-finite argument {y}"),
        ));
    }
    let mut x = if y >= -2.22 {
        y.exp() + 0.5
    } else {
        -1.0 / (y + EULER_GAMMA)
    };
    for _ in 0..100 {
        let pg = Polygammas::at(x);
        let resid = pg.digamma - y;
        let mut next = x - resid / pg.trigamma;
        if next <= 0.0 {
            next = 0.5 * x;
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return Ok(next);
        }
        x = next;
    }
    let resid = digamma(x) - y;
    if resid.abs() <= 1e-10 * y.abs().max(1.0) {
        Ok(x)
    } else {
        Err(Error::Numerical(format!(
            "inv_digamma({y}) did not converge (last x = {x})"
        )))
    }
}
