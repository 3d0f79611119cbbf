//! Generalized hyperbolic skew Student-t (GHSST) family with identity link.
//!
//! Parameters: degrees of freedom ν > 4, skewness τ, location ξ and scale ς.
//! With j = (ν + 1)/2, d = y − ξ and R = √(ς² + d²) the log density is
//!
//! ```text
//! ((1 − ν)/2) ln 2 + ν ln ς + j ln|τ| + ln K_j(|τ| R) + τ d
//!     − ln Γ(ν/2) − ½ ln π − j ln R
//! ```
//!
//! As |τ| R → 0 the pair `j ln|τ| + ln K_j(|τ| R)` tends to
//! `ln Γ(j) + (j − 1) ln 2 − j ln R`, the Student-t limit, which is used
//! below a threshold.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{MomentPair, PointLik, TimeVarying};
use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::{digamma, ln_bessel_k, ln_bessel_k_with_ratio, ln_gamma_unchecked};

const SMALL_ARG: f64 = 1e-10;
const ORDER_STEP: f64 = 1e-5;
const LN_2: f64 = std::f64::consts::LN_2;
const HALF_LN_PI: f64 = 0.572_364_942_924_700_1;

pub(super) fn check(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "ghsst",
            format!("scale must be positive and finite, got {scale}"),
        ))
    }
}

fn variance_of(dof: f64, skew: f64, scale_sq: f64) -> f64 {
    let m = dof - 2.0;
    scale_sq / m + 2.0 * skew * skew * scale_sq * scale_sq / (m * m * (dof - 4.0))
}

pub(super) fn links(dof: f64, skew: f64, location: f64, scale: f64) -> MomentPair {
    let s2 = scale * scale;
    MomentPair::new(
        location + skew * s2 / (dof - 2.0),
        variance_of(dof, skew, s2),
    )
}

/// ς² as the positive root of the quadratic variance equation, written in a
/// form that stays accurate as τ → 0.
fn scale_sq_from_variance(dof: f64, skew: f64, variance: f64) -> (f64, f64) {
    let root_u = (1.0 + 8.0 * skew * skew * variance / (dof - 4.0)).sqrt();
    (2.0 * (dof - 2.0) * variance / (1.0 + root_u), root_u)
}

pub(super) fn solve(dof: f64, skew: f64, mp: MomentPair) -> Result<TimeVarying> {
    if !(mp.variance > 0.0) || !mp.variance.is_finite() {
        return Err(Error::Solve {
            family: super::FamilyKind::Ghsst,
            mean: mp.mean,
            variance: mp.variance,
        });
    }
    let (s2, _) = scale_sq_from_variance(dof, skew, mp.variance);
    Ok(TimeVarying::Ghsst {
        location: mp.mean - skew * s2 / (dof - 2.0),
        scale: s2.sqrt(),
    })
}

/// Log density and its partials with respect to (d, ς, τ, ν) at fixed others.
struct Kernel {
    value: f64,
    d_dev: f64,
    d_scale: f64,
    d_skew: f64,
    d_dof: f64,
}

fn kernel(dof: f64, skew: f64, dev: f64, scale: f64, want_grad: bool) -> Result<Kernel> {
    let j = 0.5 * (dof + 1.0);
    let r = scale.hypot(dev);
    let ln_r = r.ln();
    let x = skew.abs() * r;
    // bessel = j ln|τ| + ln K_j(x); abs_rho = |τ| K_{j-1}/K_j; signed_r_rho = sign(τ) R K_{j-1}/K_j
    let (bessel, abs_rho, signed_r_rho) = if x < SMALL_ARG {
        let lead = ln_gamma_unchecked(j) + (j - 1.0) * LN_2 - j * ln_r;
        let c = 2.0 * (j - 1.0);
        (lead, skew * skew * r / c, skew * r * r / c)
    } else {
        let (ln_k, rho) = ln_bessel_k_with_ratio(j, x)?;
        (
            j * skew.abs().ln() + ln_k,
            skew.abs() * rho,
            skew.signum() * r * rho,
        )
    };
    let value = 0.5 * (1.0 - dof) * LN_2 + dof * scale.ln() + bessel + skew * dev
        - ln_gamma_unchecked(0.5 * dof)
        - HALF_LN_PI
        - j * ln_r;
    let mut out = Kernel {
        value,
        d_dev: 0.0,
        d_scale: 0.0,
        d_skew: 0.0,
        d_dof: 0.0,
    };
    if want_grad {
        let d_r = -abs_rho - 2.0 * j / r;
        out.d_dev = d_r * dev / r + skew;
        out.d_scale = dof / scale + d_r * scale / r;
        out.d_skew = -signed_r_rho + dev;
        let d_bessel_d_order = if x < SMALL_ARG {
            digamma(j) + LN_2 - ln_r
        } else {
            let up = ln_bessel_k(j + ORDER_STEP, x)?;
            let down = ln_bessel_k(j - ORDER_STEP, x)?;
            skew.abs().ln() + (up - down) / (2.0 * ORDER_STEP)
        };
        out.d_dof = -0.5 * LN_2 + scale.ln() + 0.5 * d_bessel_d_order
            - 0.5 * digamma(0.5 * dof)
            - 0.5 * ln_r;
    }
    if !out.value.is_finite() {
        return Err(Error::Numerical(format!(
            "ghsst log density not finite at y - xi = {dev}, scale = {scale}"
        )));
    }
    Ok(out)
}

pub(super) fn log_density(dof: f64, skew: f64, location: f64, scale: f64, y: f64) -> Result<f64> {
    Ok(kernel(dof, skew, y - location, scale, false)?.value)
}

/// Conditional CDF by adaptive quadrature of the density after the
/// substitution y = ξ + ς tan θ, which maps the real line onto (−π/2, π/2)
/// and keeps the integrand bounded for ν > 4. The mass below and above `y`
/// are integrated separately and normalized by their sum, so both tails are
/// accurate and the quadrature error in the total mass cancels.
pub(super) fn cdf(dof: f64, skew: f64, location: f64, scale: f64, y: f64) -> Result<f64> {
    let integrand = |theta: f64| {
        let (sin, cos) = theta.sin_cos();
        if cos <= 0.0 {
            return 0.0;
        }
        let d = scale * sin / cos;
        match kernel(dof, skew, d, scale, false) {
            Ok(k) if k.value.is_finite() => (k.value.exp() * scale / (cos * cos)).max(0.0),
            _ => 0.0,
        }
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let split = ((y - location) / scale).atan();
    let lower = quad::integrate(integrand, -half_pi, split, 1e-13, 1e-10)?;
    let upper = quad::integrate(integrand, split, half_pi, 1e-13, 1e-10)?;
    let total = lower.value + upper.value;
    if !(total > 0.0) {
        return Err(Error::Numerical(format!(
            "ghsst CDF: total mass {total} at y = {y}"
        )));
    }
    Ok((lower.value / total).clamp(0.0, 1.0))
}

pub(super) fn sample<R: Rng + ?Sized>(
    dof: f64,
    skew: f64,
    location: f64,
    scale: f64,
    rng: &mut R,
) -> Result<f64> {
    let gamma = Gamma::new(0.5 * dof, 1.0)
        .map_err(|e| Error::Simulation(format!("ghsst mixing sampler: {e}")))?;
    let half_s2 = 0.5 * scale * scale;
    for _ in 0..1000 {
        let g: f64 = gamma.sample(rng);
        if g > 0.0 {
            let w = half_s2 / g;
            let z: f64 = StandardNormal.sample(rng);
            let y = location + skew * w + w.sqrt() * z;
            if y.is_finite() {
                return Ok(y);
            }
        }
    }
    Err(Error::Simulation(
        "ghsst sampler keeps returning non-finite values".into(),
    ))
}

/// Derivatives with respect to (μ, σ², ν, τ) through the moment inversion.
pub(super) fn point_loglik(
    dof: f64,
    skew: f64,
    location: f64,
    scale: f64,
    y: f64,
    want_grad: bool,
) -> Result<PointLik> {
    if !y.is_finite() {
        return Err(super::FamilyKind::Ghsst.support_error(y));
    }
    let dev = y - location;
    let k = kernel(dof, skew, dev, scale, want_grad)?;
    let mut out = PointLik {
        value: k.value,
        d_mean: 0.0,
        d_variance: 0.0,
        d_invariant: [0.0; 2],
    };
    if want_grad {
        let s2 = scale * scale;
        let m = dof - 2.0;
        let m4 = dof - 4.0;
        let variance = variance_of(dof, skew, s2);
        let root_u = (1.0 + 8.0 * skew * skew * variance / m4).sqrt();
        let denom = 1.0 + root_u;
        let common = 2.0 * m * variance / (denom * denom * 2.0 * root_u);
        let s2_var = m / root_u;
        let s2_skew = -common * 16.0 * skew * variance / m4;
        let s2_dof = 2.0 * variance / denom + common * 8.0 * skew * skew * variance / (m4 * m4);
        let d_scale_per_s2 = k.d_scale / (2.0 * scale);
        // d = y − μ + τ ς²/(ν − 2)
        out.d_mean = -k.d_dev;
        out.d_variance = k.d_dev * skew / m * s2_var + d_scale_per_s2 * s2_var;
        out.d_invariant[0] = k.d_dof
            + k.d_dev * (-skew * s2 / (m * m) + skew / m * s2_dof)
            + d_scale_per_s2 * s2_dof;
        out.d_invariant[1] =
            k.d_skew + k.d_dev * (s2 / m + skew / m * s2_skew) + d_scale_per_s2 * s2_skew;
    }
    Ok(out)
}
