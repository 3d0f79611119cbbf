//! Modified Bessel function of the third kind, K_ν(x), for real order.
//!
//! The order is split as ν = μ + n with μ in [-1/2, 1/2). K_μ and K_{μ+1}
//! come from Temme's series for x <= 2 and from Steed's continued fraction
//! (CF2) otherwise; both are computed scaled by e^x. The order is then raised
//! by the forward recurrence K_{k+1} = K_{k-1} + (2k/x) K_k, carried as a
//! running logarithm plus the ratio K_{k+1}/K_k so that large orders and
//! small arguments never overflow. The recurrence costs O(ν) steps, so
//! orders above [`DEBYE_MIN_ORDER`] use the uniform large-order expansion.

use std::f64::consts::PI;

use super::ln_gamma_unchecked;
use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;

/// Orders from which the uniform asymptotic expansion replaces the recurrence.
/// Its first omitted term is below ν⁻⁴ here.
pub const DEBYE_MIN_ORDER: f64 = 1000.0;

/// ln K_ν(x) from the uniform large-order expansion with z = x/ν:
/// K_ν(νz) ≈ √(π/2ν) e^{−νη} (1+z²)^{−1/4} Σ (−1)^k u_k(t)/ν^k, t = (1+z²)^{−1/2}.
fn debye_ln_k(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let root = z.hypot(1.0);
    let t = 1.0 / root;
    let eta = root + (z / (1.0 + root)).ln();
    let t2 = t * t;
    let u1 = t * (3.0 - 5.0 * t2) / 24.0;
    let u2 = t2 * (81.0 + t2 * (-462.0 + 385.0 * t2)) / 1152.0;
    let u3 = t * t2 * (30375.0 + t2 * (-369603.0 + t2 * (765765.0 - 425425.0 * t2))) / 414720.0;
    let series = 1.0 - u1 / nu + u2 / (nu * nu) - u3 / (nu * nu * nu);
    0.5 * (PI / (2.0 * nu)).ln() - nu * eta - 0.25 * (1.0 + z * z).ln() + series.ln()
}

/// Taylor coefficients of 1/Γ(1+x) around 0 (odd and even parts).
const RECIP_GAMMA_ODD: [f64; 4] = [
    0.577_215_664_901_532_9,
    -0.042_002_635_034_095_24,
    -0.042_197_734_555_544_33,
    0.007_218_943_246_663_1,
];
const RECIP_GAMMA_EVEN: [f64; 4] = [
    1.0,
    -0.655_878_071_520_253_9,
    0.166_538_611_382_291_48,
    -0.009_621_971_527_876_973,
];

/// Temme's Γ₁(μ) = (1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ) and Γ₂(μ) = (1/Γ(1-μ) + 1/Γ(1+μ)) / 2.
fn temme_gammas(mu: f64) -> (f64, f64) {
    if mu.abs() < 1e-2 {
        let m2 = mu * mu;
        let horner = |c: &[f64; 4]| c.iter().rev().fold(0.0, |acc, &v| acc * m2 + v);
        (-horner(&RECIP_GAMMA_ODD), horner(&RECIP_GAMMA_EVEN))
    } else {
        let rg_minus = (-ln_gamma_unchecked(1.0 - mu)).exp();
        let rg_plus = (-ln_gamma_unchecked(1.0 + mu)).exp();
        (
            (rg_minus - rg_plus) / (2.0 * mu),
            0.5 * (rg_minus + rg_plus),
        )
    }
}

/// e^x K_μ(x) and e^x K_{μ+1}(x) for |μ| <= 1/2 and x <= 2.
fn temme_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half_x = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < f64::EPSILON {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let d = -half_x.ln();
    let e = mu * d;
    let fact2 = if e.abs() < f64::EPSILON {
        1.0
    } else {
        e.sinh() / e
    };
    let (gam1, gam2) = temme_gammas(mu);
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = half_x * half_x;
    let mut sum1 = p;
    let mut converged = false;
    for i in 1..=MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Temme series for K_{mu}({x}) did not converge"
        )));
    }
    let scale = x.exp();
    Ok((sum * scale, sum1 * (2.0 / x) * scale))
}

/// e^x K_μ(x) and e^x K_{μ+1}(x) for |μ| <= 1/2 and x > 2 (Steed's CF2).
fn steed_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..=MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "continued fraction for K_{mu}({x}) did not converge"
        )));
    }
    h *= a1;
    let kmu = (PI / (2.0 * x)).sqrt() / s;
    let kmu1 = kmu * (mu + x + 0.5 - h) / x;
    Ok((kmu, kmu1))
}

fn check_args(function: &'static str, order: f64, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            function,
            format!("argument must be positive and finite, got {x}"),
        ));
    }
    if !order.is_finite() {
        return Err(Error::domain(
            function,
            format!("order must be finite, got {order}"),
        ));
    }
    Ok(())
}

/// `(ln K_ν(x), K_{ν-1}(x) / K_ν(x))` for ν >= 0 and x > 0.
///
/// The ratio is what the log-density derivatives of the skew-t family need.
pub fn ln_bessel_k_with_ratio(order: f64, x: f64) -> Result<(f64, f64)> {
    check_args("ln_bessel_k", order, x)?;
    let nu = order.abs();
    if nu >= DEBYE_MIN_ORDER {
        let ln_k = debye_ln_k(nu, x);
        let ratio = (debye_ln_k(nu - 1.0, x) - ln_k).exp();
        if !ln_k.is_finite() || !ratio.is_finite() {
            return Err(Error::Numerical(format!("ln K_{order}({x}) is not finite")));
        }
        return Ok((ln_k, ratio));
    }
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (k_mu, k_mu1) = if x <= 2.0 {
        temme_scaled(mu, x)?
    } else {
        steed_scaled(mu, x)?
    };
    let mut ln_k = k_mu.ln() - x;
    let mut ratio = k_mu1 / k_mu;
    // K_{μ-1}/K_μ from the backward recurrence.
    let mut prev_ratio_inv = ratio - 2.0 * mu / x;
    let steps = n as usize;
    for i in 1..=steps {
        let next = 1.0 / ratio + 2.0 * (mu + i as f64) / x;
        ln_k += ratio.ln();
        prev_ratio_inv = 1.0 / ratio;
        ratio = next;
    }
    if !ln_k.is_finite() {
        return Err(Error::Numerical(format!("ln K_{order}({x}) is not finite")));
    }
    Ok((ln_k, prev_ratio_inv))
}

/// ln K_ν(x). Safe for large orders and arguments where K itself over- or underflows.
pub fn ln_bessel_k(order: f64, x: f64) -> Result<f64> {
    ln_bessel_k_with_ratio(order, x).map(|(v, _)| v)
}

/// K_ν(x). Returns [`Error::Overflow`] when the value exceeds `f64::MAX`;
/// use [`ln_bessel_k`] in that regime.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    let ln_k = ln_bessel_k(order, x)?;
    if ln_k > f64::MAX.ln() {
        return Err(Error::Overflow {
            function: "bessel_k",
            detail: format!("K_{order}({x}) = exp({ln_k}) is not representable"),
        });
    }
    Ok(ln_k.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_integer_closed_form(order: f64, x: f64) -> f64 {
        // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}; K_{3/2}(x) = K_{1/2}(x)(1 + 1/x)
        let k_half = (PI / (2.0 * x)).sqrt() * (-x).exp();
        if order == 0.5 {
            k_half
        } else {
            k_half * (1.0 + 1.0 / x)
        }
    }

    #[test]
    fn temme_gammas_continuous_at_switch() {
        let below = temme_gammas(0.01 - 1e-12);
        let above = temme_gammas(0.01 + 1e-12);
        assert!((below.0 - above.0).abs() < 1e-11);
        assert!((below.1 - above.1).abs() < 1e-11);
        let (g1, g2) = temme_gammas(0.0);
        assert!((g1 + super::super::EULER_GAMMA).abs() < 1e-15);
        assert_eq!(g2, 1.0);
    }

    #[test]
    fn half_order_matches_closed_form() {
        for &x in &[0.01, 0.5, 2.0, 3.0, 25.0] {
            for &order in &[0.5, 1.5] {
                let got = bessel_k(order, x).unwrap();
                let want = half_integer_closed_form(order, x);
                assert!((got - want).abs() / want < 1e-12, "K_{order}({x})");
            }
        }
    }

    #[test]
    fn known_value_order_one() {
        let got = bessel_k(1.0, 1.0).unwrap();
        assert!((got - 0.601_907_230_197_234_6).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_previous_order() {
        let (ln_k, ratio) = ln_bessel_k_with_ratio(3.7, 1.3).unwrap();
        let ln_prev = ln_bessel_k(2.7, 1.3).unwrap();
        assert!((ratio - (ln_prev - ln_k).exp()).abs() < 1e-12);
        // order below one goes through the backward step
        let (ln_k, ratio) = ln_bessel_k_with_ratio(0.3, 4.0).unwrap();
        let ln_prev = ln_bessel_k(0.7, 4.0).unwrap();
        assert!((ratio - (ln_prev - ln_k).exp()).abs() < 1e-12);
    }

    #[test]
    fn large_order_expansion_continues_recurrence() {
        for &x in &[1e-3, 0.7, 30.0, 900.0, 5e4] {
            let nu = DEBYE_MIN_ORDER - 0.25;
            let (rec, rec_ratio) = ln_bessel_k_with_ratio(nu, x).unwrap();
            let asym = debye_ln_k(nu, x);
            assert!(
                (rec - asym).abs() < 1e-12 * rec.abs().max(1.0),
                "x = {x}: {rec} vs {asym}"
            );
            let asym_ratio = (debye_ln_k(nu - 1.0, x) - asym).exp();
            assert!((rec_ratio - asym_ratio).abs() < 1e-9 * rec_ratio, "x = {x}");
        }
        assert!(ln_bessel_k_with_ratio(1e12, 3.0).unwrap().0.is_finite());
    }

    #[test]
    fn domain_and_overflow() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -2.0).is_err());
        assert!(bessel_k(f64::NAN, 2.0).is_err());
        assert!(matches!(bessel_k(200.0, 1e-3), Err(Error::Overflow { .. })));
        assert!(ln_bessel_k(200.0, 1e-3).unwrap().is_finite());
    }
}
