//! Estimation: conditional maximum likelihood, Gaussian quasi-likelihood
//! (GMLE), pseudo-ML for the invariant parameters, and Hessian-based
//! standard errors.
//!
//! All optimization runs on an unconstrained scale: ω, α, β and the
//! positive invariant parameters enter through `exp`, the GHSST degrees of
//! freedom through `4 + exp`, and ARMA coefficients and the GHSST skewness
//! unchanged. The objective handed to BFGS is the negative criterion per
//! observation.

mod start;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::engine::{evaluate, gmle_criterion, loglik, InitPolicy, Objective, Series};
use crate::error::{Error, Result};
use crate::linkmap::Family;
use crate::model::{ModelSpec, ParamVector};
use crate::optim::{minimize, BfgsOptions};

/// Estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    /// Full conditional maximum likelihood.
    Mle,
    /// Gaussian quasi-likelihood for the ARMA and GARCH parameters only.
    Gmle,
    /// GMLE followed by pseudo-ML for the invariant parameters.
    GmlePseudo,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Gmle => "gmle",
            Estimator::GmlePseudo => "gmle+pseudo",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(Estimator::Mle),
            "gmle" => Ok(Estimator::Gmle),
            "gmle+pseudo" | "gmle-pseudo" | "pseudo" => Ok(Estimator::GmlePseudo),
            other => Err(Error::Spec(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub estimator: Estimator,
    pub init: InitPolicy,
    /// Number of starting points for MLE (GMLE point, perturbed GMLE point,
    /// method of moments); at least one is always used.
    pub n_starts: usize,
    pub bfgs: BfgsOptions,
    pub compute_se: bool,
    /// Replaces the default starting points.
    pub start: Option<ParamVector>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            estimator: Estimator::Mle,
            init: InitPolicy::SampleMean,
            n_starts: 3,
            bfgs: BfgsOptions::default(),
            compute_se: true,
            start: None,
        }
    }
}

impl FitOptions {
    pub fn with_estimator(estimator: Estimator) -> Self {
        Self {
            estimator,
            ..Self::default()
        }
    }
}

/// Standard errors from the inverse negative Hessian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub values: Option<Vec<f64>>,
    /// Why `values` is missing, if it is.
    pub note: Option<String>,
    /// max |H_ij − H_ji| / max(1, √|H_ii H_jj|) of the differenced Hessian.
    pub max_asymmetry: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub spec: ModelSpec,
    pub estimator: Estimator,
    /// Full parameter vector. With plain GMLE, invariant parameters are
    /// moment-based placeholders and are not listed in `names`.
    pub theta: ParamVector,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub se: StandardErrors,
    /// Conditional log-likelihood at θ̂; absent when invariant parameters
    /// were not estimated.
    pub loglik: Option<f64>,
    /// Q_T at θ̂.
    pub gmle_criterion: f64,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub starts_tried: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Free,
    Positive,
    Above(f64),
}

fn bounds(spec: &ModelSpec) -> Vec<Bound> {
    let mut b = vec![Bound::Free; spec.n_arma()];
    b.extend(std::iter::repeat_n(Bound::Positive, spec.n_garch()));
    match spec.default_family() {
        Family::Ghsst { .. } => b.extend([Bound::Above(4.0), Bound::Free]),
        Family::LogGammaFixedShape { .. } | Family::LogitBetaFixedPrecision { .. } => {
            b.push(Bound::Positive)
        }
        _ => {}
    }
    b
}

fn to_free(b: Bound, v: f64) -> f64 {
    match b {
        Bound::Free => v,
        Bound::Positive => v.max(1e-10).ln(),
        Bound::Above(lo) => (v - lo).max(1e-10).ln(),
    }
}

/// (θ_i, dθ_i/dx_i).
fn from_free(b: Bound, x: f64) -> (f64, f64) {
    match b {
        Bound::Free => (x, 1.0),
        Bound::Positive => {
            let e = x.exp();
            (e, e)
        }
        Bound::Above(lo) => {
            let e = x.exp();
            (lo + e, e)
        }
    }
}

struct Optimum {
    theta: ParamVector,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Maximizes `objective` over the parameters flagged in `free`, others held
/// at their values in `start`.
fn optimize(
    spec: &ModelSpec,
    series: &Series,
    init: &InitPolicy,
    objective: Objective,
    start: &ParamVector,
    free: &[bool],
    bfgs: BfgsOptions,
) -> Result<Optimum> {
    let bnds = bounds(spec);
    let base = start.flatten();
    let idx: Vec<usize> = (0..base.len()).filter(|&i| free[i]).collect();
    let x0: Vec<f64> = idx.iter().map(|&i| to_free(bnds[i], base[i])).collect();
    let tf = series.len() as f64;
    let to_theta = |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut flat = base.clone();
        let mut jac = vec![0.0; x.len()];
        for (c, &i) in idx.iter().enumerate() {
            let (v, d) = from_free(bnds[i], x[c]);
            flat[i] = v;
            jac[c] = d;
        }
        (flat, jac)
    };
    let f = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (flat, jac) = to_theta(x);
        if !flat.iter().all(|v| v.is_finite()) {
            return None;
        }
        let theta = ParamVector::from_flat(spec, &flat).ok()?;
        let ev = evaluate(&theta, series, init, objective, true).ok()?;
        let g = ev.gradient?;
        let grad: Vec<f64> = idx.iter().zip(&jac).map(|(&i, d)| -g[i] * d / tf).collect();
        Some((-ev.value / tf, grad))
    };
    let res = minimize(f, &x0, bfgs);
    if !res.value.is_finite() {
        return Err(Error::Numerical(format!(
            "{objective:?} objective is undefined at the starting point"
        )));
    }
    let (flat, _) = to_theta(&res.x);
    Ok(Optimum {
        theta: ParamVector::from_flat(spec, &flat)?,
        value: -res.value * tf,
        iterations: res.iterations,
        converged: res.converged,
    })
}

fn dynamics_mask(spec: &ModelSpec) -> Vec<bool> {
    let d = spec.n_arma() + spec.n_garch();
    (0..spec.n_params()).map(|i| i < d).collect()
}

fn invariant_mask(spec: &ModelSpec) -> Vec<bool> {
    let d = spec.n_arma() + spec.n_garch();
    (0..spec.n_params()).map(|i| i >= d).collect()
}

fn check_inputs(spec: &ModelSpec, series: &Series) -> Result<()> {
    if series.kind() != spec.kind {
        return Err(Error::Data(format!(
            "series was prepared for the {} family, model is {}",
            series.kind(),
            spec.kind
        )));
    }
    if series.len() <= spec.n_params() + spec.orders.max_lag() {
        return Err(Error::Data(format!(
            "series of length {} is too short for {} parameters",
            series.len(),
            spec.n_params()
        )));
    }
    Ok(())
}

/// Dispatches on `opts.estimator`.
pub fn fit(spec: &ModelSpec, series: &Series, opts: &FitOptions) -> Result<FitReport> {
    match opts.estimator {
        Estimator::Mle => fit_mle(spec, series, opts),
        Estimator::Gmle | Estimator::GmlePseudo => fit_gmle(spec, series, opts),
    }
}

struct GmleOutcome {
    theta: ParamVector,
    iterations: usize,
    converged: bool,
    starts: usize,
}

fn gmle_core(spec: &ModelSpec, series: &Series, opts: &FitOptions) -> Result<GmleOutcome> {
    let mut starts = Vec::new();
    if let Some(s) = &opts.start {
        s.validate(spec)?;
        starts.push(s.clone());
    } else {
        let base = start::moment_start(spec, series);
        if !spec.is_mgarma() {
            let resid = start::arma_residuals(series.h(), &base.arma);
            let var = resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64;
            let mut alt = base.clone();
            alt.garch = Some(start::garch_start(spec, var.max(1e-12), 0.15, 0.75));
            starts.push(base);
            starts.push(alt);
        } else {
            starts.push(base);
        }
    }
    let mask = dynamics_mask(spec);
    let mut best: Option<Optimum> = None;
    let mut iterations = 0;
    let mut first_err = None;
    for s in &starts {
        match optimize(
            spec,
            series,
            &opts.init,
            Objective::Gaussian,
            s,
            &mask,
            opts.bfgs,
        ) {
            Ok(o) => {
                iterations += o.iterations;
                if best.as_ref().is_none_or(|b| o.value > b.value) {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best =
        best.ok_or_else(|| first_err.unwrap_or_else(|| Error::Numerical("no GMLE start".into())))?;
    Ok(GmleOutcome {
        theta: best.theta,
        iterations,
        converged: best.converged,
        starts: starts.len(),
    })
}

/// Quasi-Gaussian estimation of the ARMA and GARCH parameters; with
/// [`Estimator::GmlePseudo`] the invariant parameters are then estimated by
/// pseudo-ML holding the filtered moments fixed.
pub fn fit_gmle(spec: &ModelSpec, series: &Series, opts: &FitOptions) -> Result<FitReport> {
    check_inputs(spec, series)?;
    let g = gmle_core(spec, series, opts)?;
    let pseudo = opts.estimator == Estimator::GmlePseudo || spec.n_invariant() == 0;
    let (theta, extra_iter, pseudo_ok) = if pseudo && spec.n_invariant() > 0 {
        let (fam, it, ok) = pseudo_ml(spec, series, &opts.init, &g.theta, opts.bfgs)?;
        (
            ParamVector {
                family: fam,
                ..g.theta
            },
            it,
            ok,
        )
    } else {
        (g.theta, 0, true)
    };
    let estimator = if opts.estimator == Estimator::Mle {
        Estimator::Gmle
    } else {
        opts.estimator
    };
    let mask = if pseudo {
        vec![true; spec.n_params()]
    } else {
        dynamics_mask(spec)
    };
    let names = spec.param_names();
    let flat = theta.flatten();
    let names: Vec<String> = names
        .into_iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .map(|(n, _)| n)
        .collect();
    let estimates: Vec<f64> = flat
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| *v)
        .collect();
    let se = if opts.compute_se {
        // Dynamics: curvature of the quasi-likelihood; invariant part: of the likelihood.
        let mut se = information_se_masked(
            spec,
            series,
            &opts.init,
            &theta,
            Objective::Gaussian,
            &dynamics_mask(spec),
        );
        if pseudo && spec.n_invariant() > 0 {
            let inv = information_se_masked(
                spec,
                series,
                &opts.init,
                &theta,
                Objective::Likelihood,
                &invariant_mask(spec),
            );
            se = concat_se(se, inv);
        }
        se
    } else {
        skipped_se()
    };
    let ll = if pseudo {
        Some(loglik(&theta, series, &opts.init)?)
    } else {
        None
    };
    let k = estimates.len() as f64;
    let tf = series.len() as f64;
    Ok(FitReport {
        spec: *spec,
        estimator,
        gmle_criterion: gmle_criterion(&theta, series, &opts.init)?,
        aic: ll.map(|l| information_criteria(l, k, tf).0),
        bic: ll.map(|l| information_criteria(l, k, tf).1),
        loglik: ll,
        theta,
        names,
        estimates,
        se,
        n_obs: series.len(),
        converged: g.converged && pseudo_ok,
        iterations: g.iterations + extra_iter,
        starts_tried: g.starts,
    })
}

fn skipped_se() -> StandardErrors {
    StandardErrors {
        values: None,
        note: Some("not computed".into()),
        max_asymmetry: None,
    }
}

fn concat_se(a: StandardErrors, b: StandardErrors) -> StandardErrors {
    let values = match (a.values, b.values) {
        (Some(mut x), Some(y)) => {
            x.extend(y);
            Some(x)
        }
        _ => None,
    };
    let note = match (a.note, b.note) {
        (Some(x), Some(y)) => Some(format!("{x}; {y}")),
        (x, y) => x.or(y),
    };
    let max_asymmetry = match (a.max_asymmetry, b.max_asymmetry) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    StandardErrors {
        values,
        note,
        max_asymmetry,
    }
}

/// Pseudo-ML for φ: maximizes Σ_t log f(y_t | γ_t(φ), φ) with the
/// conditional moments fixed at those implied by the dynamics in `theta`.
/// Returns the updated family, the iteration count and a convergence flag.
/// For families without invariant parameters `theta.family` is returned.
pub fn fit_pseudo_ml_phi(
    theta: &ParamVector,
    series: &Series,
    init: &InitPolicy,
) -> Result<Family> {
    let spec = ModelSpec::new(theta.family.kind(), theta.orders())?;
    if spec.n_invariant() == 0 {
        return Ok(theta.family);
    }
    Ok(pseudo_ml(&spec, series, init, theta, BfgsOptions::default())?.0)
}

fn pseudo_ml(
    spec: &ModelSpec,
    series: &Series,
    init: &InitPolicy,
    theta: &ParamVector,
    bfgs: BfgsOptions,
) -> Result<(Family, usize, bool)> {
    let candidates: Vec<Family> = match spec.default_family() {
        Family::Ghsst { .. } => [6.0, 10.0, 20.0]
            .iter()
            .map(|&dof| Family::Ghsst { dof, skew: 0.0 })
            .collect(),
        _ => {
            let eps = start::arma_residuals(series.h(), &theta.arma);
            let var = eps.iter().map(|e| e * e).sum::<f64>() / eps.len() as f64;
            vec![start::invariant_start(
                spec,
                series.mean_h(),
                var.max(1e-12),
            )]
        }
    };
    // pick the best candidate by likelihood, then refine it
    let mut best: Option<(f64, Family)> = None;
    for fam in candidates {
        let th = ParamVector {
            family: fam,
            ..theta.clone()
        };
        if let Ok(l) = loglik(&th, series, init) {
            if best.as_ref().is_none_or(|b| l > b.0) {
                best = Some((l, fam));
            }
        }
    }
    let (_, fam) = best
        .ok_or_else(|| Error::Numerical("pseudo-ML: likelihood undefined at every start".into()))?;
    let start = ParamVector {
        family: fam,
        ..theta.clone()
    };
    let o = optimize(
        spec,
        series,
        init,
        Objective::Likelihood,
        &start,
        &invariant_mask(spec),
        bfgs,
    )?;
    Ok((o.theta.family, o.iterations, o.converged))
}

/// Deterministic perturbation of a starting point.
fn perturb(theta: &ParamVector) -> ParamVector {
    let mut t = theta.clone();
    t.arma.ar.iter_mut().for_each(|v| *v *= 0.97);
    t.arma.ma.iter_mut().for_each(|v| *v *= 0.9);
    if let Some(g) = t.garch.as_mut() {
        g.omega *= 1.2;
        g.alpha.iter_mut().for_each(|v| *v = *v * 1.25 + 1e-3);
        g.beta.iter_mut().for_each(|v| *v *= 0.97);
    }
    t.family = match t.family {
        Family::Ghsst { dof, skew } => Family::Ghsst {
            dof: dof + 2.0,
            skew: 0.5 * skew,
        },
        Family::LogGammaFixedShape { shape } => Family::LogGammaFixedShape { shape: 1.1 * shape },
        Family::LogitBetaFixedPrecision { precision } => Family::LogitBetaFixedPrecision {
            precision: 1.1 * precision,
        },
        f => f,
    };
    t
}

/// Conditional maximum likelihood with multi-start.
pub fn fit_mle(spec: &ModelSpec, series: &Series, opts: &FitOptions) -> Result<FitReport> {
    check_inputs(spec, series)?;
    let mut starts = Vec::new();
    let mut gmle_iterations = 0;
    if let Some(s) = &opts.start {
        s.validate(spec)?;
        starts.push(s.clone());
    } else {
        let g = gmle_core(
            spec,
            series,
            &FitOptions {
                start: None,
                ..opts.clone()
            },
        );
        let moment = start::moment_start(spec, series);
        let with_phi = |t: ParamVector| -> ParamVector {
            match pseudo_ml(spec, series, &opts.init, &t, opts.bfgs) {
                Ok((fam, _, _)) => ParamVector { family: fam, ..t },
                Err(_) => t,
            }
        };
        if let Ok(g) = g {
            gmle_iterations = g.iterations;
            let gp = if spec.n_invariant() > 0 {
                with_phi(g.theta)
            } else {
                g.theta
            };
            starts.push(perturb(&gp));
            starts.insert(0, gp);
        }
        let moment = if spec.n_invariant() > 0 {
            with_phi(moment)
        } else {
            moment
        };
        starts.push(moment);
        starts.truncate(opts.n_starts.max(1));
    }
    let all = vec![true; spec.n_params()];
    let mut best: Option<Optimum> = None;
    let mut iterations = gmle_iterations;
    let mut first_err = None;
    for s in &starts {
        match optimize(
            spec,
            series,
            &opts.init,
            Objective::Likelihood,
            s,
            &all,
            opts.bfgs,
        ) {
            Ok(o) => {
                iterations += o.iterations;
                if best.as_ref().is_none_or(|b| o.value > b.value) {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best =
        best.ok_or_else(|| first_err.unwrap_or_else(|| Error::Numerical("no MLE start".into())))?;
    let theta = best.theta;
    let se = if opts.compute_se {
        information_se(&theta, series, &opts.init)
    } else {
        skipped_se()
    };
    let k = spec.n_params() as f64;
    let tf = series.len() as f64;
    Ok(FitReport {
        spec: *spec,
        estimator: Estimator::Mle,
        names: spec.param_names(),
        estimates: theta.flatten(),
        gmle_criterion: gmle_criterion(&theta, series, &opts.init)?,
        loglik: Some(best.value),
        aic: Some(information_criteria(best.value, k, tf).0),
        bic: Some(information_criteria(best.value, k, tf).1),
        theta,
        se,
        n_obs: series.len(),
        converged: best.converged,
        iterations,
        starts_tried: starts.len(),
    })
}

/// Standard errors of all parameters from the inverse negative Hessian of
/// the log-likelihood at `theta`, the Hessian being central differences of
/// the analytic gradient with steps max(1e-5, 1e-5 |θ_i|).
pub fn information_se(theta: &ParamVector, series: &Series, init: &InitPolicy) -> StandardErrors {
    let spec = match ModelSpec::new(theta.family.kind(), theta.orders()) {
        Ok(s) => s,
        Err(e) => {
            return StandardErrors {
                values: None,
                note: Some(e.to_string()),
                max_asymmetry: None,
            }
        }
    };
    information_se_masked(
        &spec,
        series,
        init,
        theta,
        Objective::Likelihood,
        &vec![true; spec.n_params()],
    )
}

/// Hessian of the log-likelihood at `theta` by extrapolated central differences of the
/// analytic gradient, in flattened-θ order.
pub fn loglik_hessian(
    theta: &ParamVector,
    series: &Series,
    init: &InitPolicy,
) -> Result<DMatrix<f64>> {
    let spec = ModelSpec::new(theta.family.kind(), theta.orders())?;
    hessian(
        &spec,
        series,
        init,
        theta,
        Objective::Likelihood,
        &vec![true; spec.n_params()],
    )
}

fn hessian(
    spec: &ModelSpec,
    series: &Series,
    init: &InitPolicy,
    theta: &ParamVector,
    objective: Objective,
    mask: &[bool],
) -> Result<DMatrix<f64>> {
    let base = theta.flatten();
    let idx: Vec<usize> = (0..base.len()).filter(|&i| mask[i]).collect();
    let k = idx.len();
    let grad_at = |flat: &[f64]| -> Result<Vec<f64>> {
        let th = ParamVector::from_flat(spec, flat)?;
        let g = evaluate(&th, series, init, objective, true)?
            .gradient
            .expect("gradient requested");
        Ok(idx.iter().map(|&i| g[i]).collect())
    };
    let central = |i: usize, step: f64| -> Result<Vec<f64>> {
        let mut up = base.clone();
        up[i] += step;
        let mut dn = base.clone();
        dn[i] -= step;
        let (gu, gd) = (grad_at(&up)?, grad_at(&dn)?);
        Ok(gu
            .iter()
            .zip(&gd)
            .map(|(u, d)| (u - d) / (2.0 * step))
            .collect())
    };
    let mut h = DMatrix::zeros(k, k);
    for (c, &i) in idx.iter().enumerate() {
        // one Richardson step cancels the O(step²) truncation term
        let step = 1e-4_f64.max(1e-4 * base[i].abs());
        let coarse = central(i, step)?;
        let fine = central(i, 0.5 * step)?;
        for r in 0..k {
            h[(r, c)] = (4.0 * fine[r] - coarse[r]) / 3.0;
        }
    }
    Ok(h)
}

/// Per-observation (AIC, BIC) for `k` parameters and `t` observations.
pub fn information_criteria(loglik: f64, k: f64, t: f64) -> (f64, f64) {
    (
        (-2.0 * loglik + 2.0 * k) / t,
        (-2.0 * loglik + k * t.ln()) / t,
    )
}

/// max |H_ij − H_ji| / max(1, √|H_ii H_jj|).
pub fn hessian_asymmetry(h: &DMatrix<f64>) -> f64 {
    let k = h.nrows();
    let mut worst = 0.0_f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let scale = (h[(i, i)] * h[(j, j)]).abs().sqrt().max(1.0);
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs() / scale);
        }
    }
    worst
}

fn information_se_masked(
    spec: &ModelSpec,
    series: &Series,
    init: &InitPolicy,
    theta: &ParamVector,
    objective: Objective,
    mask: &[bool],
) -> StandardErrors {
    let h = match hessian(spec, series, init, theta, objective, mask) {
        Ok(h) => h,
        Err(e) => {
            return StandardErrors {
                values: None,
                note: Some(format!("Hessian evaluation failed: {e}")),
                max_asymmetry: None,
            }
        }
    };
    se_from_hessian(&h)
}

/// Standard errors √diag((−H)⁻¹) from a log-likelihood Hessian, after
/// symmetrizing; unavailable when −H is not positive definite.
pub fn se_from_hessian(h: &DMatrix<f64>) -> StandardErrors {
    let asym = hessian_asymmetry(h);
    let sym = (h + h.transpose()) * 0.5;
    let neg = -sym;
    match neg.cholesky() {
        Some(chol) => {
            let inv = chol.inverse();
            let values: Vec<f64> = (0..inv.nrows()).map(|i| inv[(i, i)].sqrt()).collect();
            StandardErrors {
                values: Some(values),
                note: None,
                max_asymmetry: Some(asym),
            }
        }
        None => StandardErrors {
            values: None,
            note: Some("negative Hessian is not positive definite".into()),
            max_asymmetry: Some(asym),
        },
    }
}
