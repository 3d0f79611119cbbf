//! log-Gamma family: y | γ ~ Gamma(c, c/η) with E[y] = η, and h = log.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{FamilyKind, MomentPair, PointLik, TimeVarying};
use crate::error::{Error, Result};
use crate::specfun::{inv_trigamma, ln_gamma_unchecked, Polygammas};

pub(super) fn check(shape: f64, mean: f64) -> Result<()> {
    if shape > 0.0 && mean > 0.0 && shape.is_finite() && mean.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "log-gamma",
            format!("shape and mean must be positive and finite, got c = {shape}, eta = {mean}"),
        ))
    }
}

/// μ = ln η + ψ(c) − ln c, σ² = ψ₁(c).
pub(super) fn links(shape: f64, mean: f64) -> MomentPair {
    let pg = Polygammas::at(shape);
    MomentPair::new(mean.ln() + pg.digamma - shape.ln(), pg.trigamma)
}

fn solve_error(mp: MomentPair) -> Error {
    Error::Solve {
        family: FamilyKind::LogGamma,
        mean: mp.mean,
        variance: mp.variance,
    }
}

pub(super) fn solve(mp: MomentPair) -> Result<TimeVarying> {
    if !(mp.variance > 0.0) || !mp.variance.is_finite() {
        return Err(solve_error(mp));
    }
    let shape = inv_trigamma(mp.variance).map_err(|_| solve_error(mp))?;
    let mean = eta_from_mean(shape, mp.mean);
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(solve_error(mp));
    }
    Ok(TimeVarying::Gamma { shape, mean })
}

pub(super) fn solve_fixed_shape(shape: f64, mean_link: f64) -> TimeVarying {
    TimeVarying::Gamma {
        shape,
        mean: eta_from_mean(shape, mean_link),
    }
}

fn eta_from_mean(shape: f64, mean_link: f64) -> f64 {
    (mean_link + shape.ln() - Polygammas::at(shape).digamma).exp()
}

pub(super) fn log_density(shape: f64, mean: f64, y: f64) -> f64 {
    let rate = shape / mean;
    shape * rate.ln() - ln_gamma_unchecked(shape) + (shape - 1.0) * y.ln() - rate * y
}

pub(super) fn sample<R: Rng + ?Sized>(shape: f64, mean: f64, rng: &mut R) -> Result<f64> {
    let dist = Gamma::new(shape, mean / shape)
        .map_err(|e| Error::Simulation(format!("gamma sampler: {e}")))?;
    for _ in 0..1000 {
        let y = dist.sample(rng);
        if y > 0.0 && y.is_finite() {
            return Ok(y);
        }
    }
    Err(Error::Simulation(format!(
        "gamma sampler with c = {shape}, eta = {mean} keeps returning values outside (0, inf)"
    )))
}

/// With `fixed_shape`, the variance derivative is replaced by the derivative
/// with respect to the shape c at fixed μ (reported as `d_invariant[0]`).
pub(super) fn point_loglik(
    shape: f64,
    mean: f64,
    y: f64,
    want_grad: bool,
    fixed_shape: bool,
) -> Result<PointLik> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(FamilyKind::LogGamma.support_error(y));
    }
    let value = log_density(shape, mean, y);
    let mut out = PointLik {
        value,
        d_mean: 0.0,
        d_variance: 0.0,
        d_invariant: [0.0; 2],
    };
    if want_grad {
        let pg = Polygammas::at(shape);
        let ratio = y / mean;
        // ∂ℓ/∂ln η and ∂ℓ/∂c at fixed η
        let d_ln_eta = shape * (ratio - 1.0);
        let d_shape = shape.ln() + 1.0 - mean.ln() - pg.digamma + y.ln() - ratio;
        // at fixed μ, d ln η / dc = 1/c − ψ₁(c)
        let d_shape_fixed_mean = d_shape + d_ln_eta * (1.0 / shape - pg.trigamma);
        out.d_mean = d_ln_eta;
        if fixed_shape {
            out.d_invariant[0] = d_shape_fixed_mean;
        } else {
            out.d_variance = d_shape_fixed_mean / pg.tetragamma;
        }
    }
    Ok(out)
}
