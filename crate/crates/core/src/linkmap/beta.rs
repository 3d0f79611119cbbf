//! logit-Beta family: y | γ ~ Beta(a, b), and h = logit.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{FamilyKind, MomentPair, PointLik, TimeVarying};
use crate::error::{Error, Result};
use crate::specfun::{digamma, inv_digamma, ln_gamma_unchecked, Polygammas};

const NEWTON_MAX_ITER: usize = 100;
const MAX_LOG_STEP: f64 = 3.0;

pub(super) fn check(a: f64, b: f64) -> Result<()> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "logit-beta",
            format!("a and b must be positive and finite, got a = {a}, b = {b}"),
        ))
    }
}

/// μ = ψ(a) − ψ(b), σ² = ψ₁(a) + ψ₁(b).
pub(super) fn links(a: f64, b: f64) -> MomentPair {
    let pa = Polygammas::at(a);
    let pb = Polygammas::at(b);
    MomentPair::new(pa.digamma - pb.digamma, pa.trigamma + pb.trigamma)
}

fn solve_error(mp: MomentPair) -> Error {
    Error::Solve {
        family: FamilyKind::LogitBeta,
        mean: mp.mean,
        variance: mp.variance,
    }
}

fn converged(f1: f64, f2: f64, mp: MomentPair) -> bool {
    f1.abs() <= 1e-13 * mp.mean.abs().max(1.0) && f2.abs() <= 1e-13 * mp.variance.max(1.0)
}

/// Solves (ψ(a) − ψ(b), ψ₁(a) + ψ₁(b)) = (μ, σ²).
///
/// Newton's method on (ln a, ln b) with a backtracking line search, started
/// from `start` or from the small-variance approximation
/// `a ≈ (1 + e^μ)/σ²`, `b ≈ (1 + e^{−μ})/σ²`. If Newton stalls, a nested
/// bisection (outer on b, inner `a = ψ⁻¹(μ + ψ(b))`) locates the root.
pub(super) fn solve(mp: MomentPair, start: Option<(f64, f64)>) -> Result<TimeVarying> {
    if !(mp.variance > 0.0) || !mp.variance.is_finite() {
        return Err(solve_error(mp));
    }
    let seed = match start {
        Some((a, b)) if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() => (a, b),
        _ => (
            (1.0 + mp.mean.exp()) / mp.variance,
            (1.0 + (-mp.mean).exp()) / mp.variance,
        ),
    };
    if let Some((a, b)) = newton(mp, seed) {
        return Ok(TimeVarying::Beta { a, b });
    }
    let (a, b) = bisection(mp).ok_or_else(|| solve_error(mp))?;
    let (a, b) = newton(mp, (a, b)).unwrap_or((a, b));
    let back = links(a, b);
    if (back.mean - mp.mean).abs() <= 1e-8 * mp.mean.abs().max(1.0)
        && (back.variance - mp.variance).abs() <= 1e-8 * mp.variance.max(1.0)
    {
        Ok(TimeVarying::Beta { a, b })
    } else {
        Err(solve_error(mp))
    }
}

fn residual(mp: MomentPair, a: f64, b: f64) -> (f64, f64, Polygammas, Polygammas) {
    let pa = Polygammas::at(a);
    let pb = Polygammas::at(b);
    (
        pa.digamma - pb.digamma - mp.mean,
        pa.trigamma + pb.trigamma - mp.variance,
        pa,
        pb,
    )
}

fn merit(f1: f64, f2: f64, mp: MomentPair) -> f64 {
    let s = f2 / mp.variance;
    f1 * f1 + s * s
}

fn newton(mp: MomentPair, (a0, b0): (f64, f64)) -> Option<(f64, f64)> {
    let (mut u, mut v) = (a0.ln(), b0.ln());
    let (mut f1, mut f2, mut pa, mut pb) = residual(mp, a0, b0);
    for _ in 0..NEWTON_MAX_ITER {
        if !(f1.is_finite() && f2.is_finite()) {
            return None;
        }
        let (a, b) = (u.exp(), v.exp());
        if converged(f1, f2, mp) {
            return Some((a, b));
        }
        // Jacobian with respect to (ln a, ln b)
        let j11 = pa.trigamma * a;
        let j12 = -pb.trigamma * b;
        let j21 = pa.tetragamma * a;
        let j22 = pb.tetragamma * b;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut du = -(j22 * f1 - j12 * f2) / det;
        let mut dv = -(j11 * f2 - j21 * f1) / det;
        let largest = du.abs().max(dv.abs());
        if largest > MAX_LOG_STEP {
            du *= MAX_LOG_STEP / largest;
            dv *= MAX_LOG_STEP / largest;
        }
        let m0 = merit(f1, f2, mp);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (un, vn) = (u + lambda * du, v + lambda * dv);
            let (g1, g2, qa, qb) = residual(mp, un.exp(), vn.exp());
            let m1 = merit(g1, g2, mp);
            if m1.is_finite() && m1 < (1.0 - 1e-4 * lambda) * m0 {
                u = un;
                v = vn;
                f1 = g1;
                f2 = g2;
                pa = qa;
                pb = qb;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            let (a, b) = (u.exp(), v.exp());
            let back_ok = f1.abs() <= 1e-10 * mp.mean.abs().max(1.0)
                && f2.abs() <= 1e-10 * mp.variance.max(1.0);
            return back_ok.then_some((a, b));
        }
    }
    None
}

/// a(b) solving ψ(a) − ψ(b) = μ.
fn a_given_b(mean: f64, b: f64) -> Option<f64> {
    inv_digamma(mean + digamma(b)).ok()
}

fn bisection(mp: MomentPair) -> Option<(f64, f64)> {
    // G(b) = ψ₁(a(b)) + ψ₁(b) − σ² is decreasing in b.
    let g = |b: f64| -> Option<f64> {
        let a = a_given_b(mp.mean, b)?;
        Some(Polygammas::at(a).trigamma + Polygammas::at(b).trigamma - mp.variance)
    };
    let mut lo = 1e-10_f64;
    while g(lo)? <= 0.0 {
        lo *= 1e-3;
        if lo < 1e-300 {
            return None;
        }
    }
    let mut hi = 1.0_f64;
    while g(hi)? >= 0.0 {
        hi *= 4.0;
        if hi > 1e15 {
            return None;
        }
    }
    let (mut llo, mut lhi) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (llo + lhi);
        if g(mid.exp())? > 0.0 {
            llo = mid;
        } else {
            lhi = mid;
        }
        if lhi - llo < 1e-15 {
            break;
        }
    }
    let b = (0.5 * (llo + lhi)).exp();
    Some((a_given_b(mp.mean, b)?, b))
}

/// Solves ψ(a) − ψ(τ − a) = μ for a in (0, τ).
pub(super) fn solve_fixed_precision(precision: f64, mean_link: f64) -> Result<TimeVarying> {
    let err = || Error::Solve {
        family: FamilyKind::LogitBeta,
        mean: mean_link,
        variance: f64::NAN,
    };
    // Work with s = logit(a / τ); the residual is increasing in s.
    let mut s = mean_link;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..200 {
        let frac = 1.0 / (1.0 + (-s).exp());
        let a = precision * frac;
        let b = precision * (1.0 - frac);
        if !(a > 0.0 && b > 0.0) {
            return Err(err());
        }
        let pa = Polygammas::at(a);
        let pb = Polygammas::at(b);
        let resid = pa.digamma - pb.digamma - mean_link;
        if resid.abs() <= 1e-13 * mean_link.abs().max(1.0) {
            return Ok(TimeVarying::Beta { a, b });
        }
        if resid > 0.0 {
            hi = hi.min(s);
        } else {
            lo = lo.max(s);
        }
        let slope = (pa.trigamma + pb.trigamma) * a * b / precision;
        let mut next = s - (resid / slope).clamp(-5.0, 5.0);
        if !(next > lo && next < hi) {
            next = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + 5.0
            } else {
                hi - 5.0
            };
        }
        if (next - s).abs() <= 1e-15 * s.abs().max(1.0) {
            return Ok(TimeVarying::Beta { a, b });
        }
        s = next;
    }
    Err(err())
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}

pub(super) fn log_density(a: f64, b: f64, y: f64) -> f64 {
    (a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p() - ln_beta(a, b)
}

pub(super) fn sample<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let dist = Beta::new(a, b).map_err(|e| Error::Simulation(format!("beta sampler: {e}")))?;
    for _ in 0..1000 {
        let y = dist.sample(rng);
        if y > 0.0 && y < 1.0 {
            return Ok(y);
        }
    }
    Err(Error::Simulation(format!(
        "beta sampler with a = {a}, b = {b} keeps returning values outside (0, 1)"
    )))
}

/// Score with respect to (a, b).
fn score_ab(a: f64, b: f64, y: f64, pa: &Polygammas, pb: &Polygammas) -> (f64, f64) {
    let psi_ab = digamma(a + b);
    (
        y.ln() - pa.digamma + psi_ab,
        (-y).ln_1p() - pb.digamma + psi_ab,
    )
}

fn check_y(y: f64) -> Result<()> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(FamilyKind::LogitBeta.support_error(y))
    }
}

pub(super) fn point_loglik(a: f64, b: f64, y: f64, want_grad: bool) -> Result<PointLik> {
    check_y(y)?;
    let mut out = PointLik {
        value: log_density(a, b, y),
        d_mean: 0.0,
        d_variance: 0.0,
        d_invariant: [0.0; 2],
    };
    if want_grad {
        let pa = Polygammas::at(a);
        let pb = Polygammas::at(b);
        let (da, db) = score_ab(a, b, y, &pa, &pb);
        // Solve Jᵀ g = (da, db) with J = ∂(μ, σ²)/∂(a, b).
        let det = pa.trigamma * pb.tetragamma + pa.tetragamma * pb.trigamma;
        out.d_mean = (da * pb.tetragamma - pa.tetragamma * db) / det;
        out.d_variance = (pa.trigamma * db + pb.trigamma * da) / det;
    }
    Ok(out)
}

/// Derivatives with respect to μ and the precision a + b.
pub(super) fn point_loglik_fixed_precision(
    a: f64,
    b: f64,
    y: f64,
    want_grad: bool,
) -> Result<PointLik> {
    check_y(y)?;
    let mut out = PointLik {
        value: log_density(a, b, y),
        d_mean: 0.0,
        d_variance: 0.0,
        d_invariant: [0.0; 2],
    };
    if want_grad {
        let pa = Polygammas::at(a);
        let pb = Polygammas::at(b);
        let (da, db) = score_ab(a, b, y, &pa, &pb);
        let total = pa.trigamma + pb.trigamma;
        out.d_mean = (da - db) / total;
        out.d_invariant[0] = (da * pb.trigamma + db * pa.trigamma) / total;
    }
    Ok(out)
}
