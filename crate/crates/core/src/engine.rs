//! The GARMA-GARCH recursion.
//!
//! For t = 1, …, T
//!
//! ```text
//! μ_t  = φ₀ + Σ_j φ_j h(y_{t−j}) + Σ_j δ_j ε_{t−j}
//! σ²_t = ω + Σ_i α_i ε²_{t−i} + Σ_j β_j σ²_{t−j}
//! ε_t  = h(y_t) − μ_t
//! ```
//!
//! and γ_t solves the family's mean/variance links at (μ_t, σ²_t). In the
//! M-GARMA baseline there is no variance recursion; γ_t follows from μ_t and
//! the fixed invariant parameter, and σ²_t is reported as V_φ(γ_t).
//!
//! Alongside the filter, this module evaluates the conditional
//! log-likelihood and the Gaussian quasi-likelihood together with their
//! exact gradients, obtained by differentiating the recursion forward in t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmap::{FamilyKind, MomentPair, TimeVarying};
use crate::model::ParamVector;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Observations together with their y-link transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    kind: FamilyKind,
    y: Vec<f64>,
    h: Vec<f64>,
}

impl Series {
    /// Validates every observation against the family support.
    pub fn new(kind: FamilyKind, y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Data("series is empty".into()));
        }
        let h = y
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                kind.y_link(v)
                    .map_err(|e| Error::Data(format!("observation {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, y, h })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// h(y_t).
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn mean_h(&self) -> f64 {
        self.h.iter().sum::<f64>() / self.h.len() as f64
    }

    /// Sample variance of h(y_t) (divisor T).
    pub fn var_h(&self) -> f64 {
        let m = self.mean_h();
        self.h.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.h.len() as f64
    }
}

/// Pre-sample values, oldest first. Each vector must hold at least
/// `max(p, q, r, s)` entries; only the most recent ones are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Presample {
    pub h: Vec<f64>,
    pub eps: Vec<f64>,
    pub sigma2: Vec<f64>,
}

/// How the recursion is started.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitPolicy {
    /// ε = 0 in the mean equation, ε² = σ² = ω/(1 − Σα − Σβ) in the
    /// variance equation (the sample variance of h(y) when the persistence
    /// is one or more), and pre-sample h(y) equal to the sample mean of the
    /// series.
    #[default]
    SampleMean,
    /// Explicit pre-sample values, e.g. the state a simulator ended its
    /// burn-in with.
    Given(Presample),
}

/// Per-t output of [`filter`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutput {
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub eps: Vec<f64>,
    pub gamma: Vec<TimeVarying>,
    /// Pointwise log-likelihood ℓ_t.
    pub loglik_terms: Vec<f64>,
}

impl FilterOutput {
    pub fn loglik(&self) -> f64 {
        self.loglik_terms.iter().sum()
    }

    /// e_t = ε_t / σ_t.
    pub fn standardized_residuals(&self) -> Vec<f64> {
        self.eps
            .iter()
            .zip(&self.sigma2)
            .map(|(e, s)| e / s.sqrt())
            .collect()
    }
}

/// Which criterion [`evaluate`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Σ_t log f(y_t | γ_t, φ).
    Likelihood,
    /// Gaussian quasi-log-likelihood −½ Σ_t (ln 2π + ln σ²_t + ε²_t/σ²_t).
    /// Without a variance recursion (M-GARMA) the constant variance is
    /// profiled out, which makes this conditional least squares.
    Gaussian,
}

/// Objective value and, when requested, its gradient with respect to the
/// flattened θ.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

/// Runs the recursion and returns the per-t sequences.
pub fn filter(theta: &ParamVector, series: &Series, init: &InitPolicy) -> Result<FilterOutput> {
    let (_, out) = run(theta, series, init, Objective::Likelihood, false, true)?;
    Ok(out.expect("stored output requested"))
}

/// Conditional log-likelihood Σ_t ℓ_t.
pub fn loglik(theta: &ParamVector, series: &Series, init: &InitPolicy) -> Result<f64> {
    Ok(evaluate(theta, series, init, Objective::Likelihood, false)?.value)
}

/// The GMLE criterion Q_T = (1/T) Σ_t (ln σ²_t + ε²_t/σ²_t); for M-GARMA
/// models σ²_t is the profiled constant Σ ε²_t / T.
pub fn gmle_criterion(theta: &ParamVector, series: &Series, init: &InitPolicy) -> Result<f64> {
    let quasi = evaluate(theta, series, init, Objective::Gaussian, false)?.value;
    Ok(-2.0 * quasi / series.len() as f64 - LN_2PI)
}

/// Objective value with an optional analytic gradient.
pub fn evaluate(
    theta: &ParamVector,
    series: &Series,
    init: &InitPolicy,
    objective: Objective,
    want_grad: bool,
) -> Result<Evaluation> {
    Ok(run(theta, series, init, objective, want_grad, false)?.0)
}

struct Layout {
    p: usize,
    q: usize,
    r: usize,
    s: usize,
    m: usize,
    /// Index of ω in the flattened θ.
    garch_at: usize,
    inv_at: usize,
    k: usize,
}

fn run(
    theta: &ParamVector,
    series: &Series,
    init: &InitPolicy,
    objective: Objective,
    want_grad: bool,
    store: bool,
) -> Result<(Evaluation, Option<FilterOutput>)> {
    if theta.family.kind() != series.kind() {
        return Err(Error::Params(format!(
            "parameters are for the {} family but the series was built for {}",
            theta.family.kind(),
            series.kind()
        )));
    }
    theta.family.validate()?;
    let o = theta.orders();
    let garch_at = 1 + o.p + o.q;
    let inv_at = garch_at + theta.garch.as_ref().map_or(0, |_| 1 + o.r + o.s);
    let lay = Layout {
        p: o.p,
        q: o.q,
        r: o.r,
        s: o.s,
        m: o.max_lag(),
        garch_at,
        inv_at,
        k: inv_at + theta.family.invariant_params().len(),
    };
    let t_len = series.len();
    let n = lay.m + t_len;
    let k = if want_grad { lay.k } else { 0 };

    // Extended arrays: indices 0..m hold the pre-sample.
    let mut h_ext = vec![0.0; n];
    let mut eps_ext = vec![0.0; n];
    let mut epssq_ext = vec![0.0; n];
    let mut sig_ext = vec![0.0; n];
    h_ext[lay.m..].copy_from_slice(series.h());

    // d/dθ of ε, ε², σ²; row t has k entries.
    let mut deps = vec![0.0; n * k];
    let mut depssq = vec![0.0; n * k];
    let mut dsig = vec![0.0; n * k];

    match init {
        InitPolicy::SampleMean => {
            let mean_h = series.mean_h();
            let (sbar, dsbar) = presample_variance(theta, series, &lay);
            for i in 0..lay.m {
                h_ext[i] = mean_h;
                epssq_ext[i] = sbar;
                sig_ext[i] = sbar;
                if want_grad {
                    for (j, d) in dsbar.iter().enumerate() {
                        depssq[i * k + lay.garch_at + j] = *d;
                        dsig[i * k + lay.garch_at + j] = *d;
                    }
                }
            }
        }
        InitPolicy::Given(pre) => {
            for (name, v) in [("h", &pre.h), ("eps", &pre.eps), ("sigma2", &pre.sigma2)] {
                if v.len() < lay.m {
                    return Err(Error::Params(format!(
                        "pre-sample '{name}' has {} values, the model needs {}",
                        v.len(),
                        lay.m
                    )));
                }
            }
            for i in 0..lay.m {
                h_ext[i] = pre.h[pre.h.len() - lay.m + i];
                eps_ext[i] = pre.eps[pre.eps.len() - lay.m + i];
                epssq_ext[i] = eps_ext[i] * eps_ext[i];
                sig_ext[i] = pre.sigma2[pre.sigma2.len() - lay.m + i];
            }
        }
    }

    let family = theta.family;
    let arma = &theta.arma;
    let garch = theta.garch.as_ref();
    let mut gradient = vec![0.0; k];
    let mut value = 0.0;
    let mut sum_sq = 0.0;
    let mut dmu = vec![0.0; k];
    let mut dsig_t = vec![0.0; k];
    let mut hint: Option<TimeVarying> = None;
    let mut out = store.then(|| FilterOutput {
        mu: Vec::with_capacity(t_len),
        sigma2: Vec::with_capacity(t_len),
        eps: Vec::with_capacity(t_len),
        gamma: Vec::with_capacity(t_len),
        loglik_terms: Vec::with_capacity(t_len),
    });

    for t in 0..t_len {
        let i = lay.m + t;
        let mut mu = arma.intercept;
        for (j, phi) in arma.ar.iter().enumerate() {
            mu += phi * h_ext[i - 1 - j];
        }
        for (j, delta) in arma.ma.iter().enumerate() {
            mu += delta * eps_ext[i - 1 - j];
        }
        let sigma2 = match garch {
            Some(g) => {
                let mut v = g.omega;
                for (j, a) in g.alpha.iter().enumerate() {
                    v += a * epssq_ext[i - 1 - j];
                }
                for (j, b) in g.beta.iter().enumerate() {
                    v += b * sig_ext[i - 1 - j];
                }
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Numerical(format!(
                        "conditional variance {v} is not positive"
                    ))
                    .at_time(t + 1));
                }
                v
            }
            None => f64::NAN,
        };
        if !mu.is_finite() {
            return Err(
                Error::Numerical(format!("conditional mean {mu} is not finite")).at_time(t + 1),
            );
        }
        let eps = h_ext[i] - mu;
        eps_ext[i] = eps;
        epssq_ext[i] = eps * eps;
        sig_ext[i] = sigma2;

        if want_grad {
            propagate(
                &lay,
                theta,
                &h_ext,
                &eps_ext,
                &epssq_ext,
                &sig_ext,
                &deps,
                &depssq,
                &dsig,
                i,
                &mut dmu,
                &mut dsig_t,
            );
            let row = i * k;
            #[allow(clippy::needless_range_loop)]
            for c in 0..k {
                deps[row + c] = -dmu[c];
                depssq[row + c] = -2.0 * eps * dmu[c];
                dsig[row + c] = dsig_t[c];
            }
        }

        let mp = MomentPair::new(mu, sigma2);
        let need_lik = objective == Objective::Likelihood || store;
        if need_lik {
            let pl = family
                .point_loglik(series.y()[t], mp, &mut hint, want_grad)
                .map_err(|e| e.at_time(t + 1))?;
            if !pl.value.is_finite() {
                return Err(
                    Error::Numerical("log-likelihood term is not finite".into()).at_time(t + 1)
                );
            }
            if objective == Objective::Likelihood {
                value += pl.value;
                if want_grad {
                    for (c, g) in gradient[..lay.inv_at].iter_mut().enumerate() {
                        *g += pl.d_mean * dmu[c] + pl.d_variance * dsig_t[c];
                    }
                    for (g, d) in gradient[lay.inv_at..lay.k].iter_mut().zip(&pl.d_invariant) {
                        *g += d;
                    }
                }
            }
            if let Some(out) = out.as_mut() {
                let gamma = hint.expect("solved above");
                let reported_var = if garch.is_some() {
                    sigma2
                } else {
                    family.mean_var_links(&gamma)?.variance
                };
                out.mu.push(mu);
                out.sigma2.push(reported_var);
                out.eps.push(eps);
                out.gamma.push(gamma);
                out.loglik_terms.push(pl.value);
            }
        }
        if objective == Objective::Gaussian {
            if garch.is_some() {
                value -= 0.5 * (LN_2PI + sigma2.ln() + eps * eps / sigma2);
                if want_grad {
                    let d_mean = eps / sigma2;
                    let d_var = -0.5 * (1.0 / sigma2 - eps * eps / (sigma2 * sigma2));
                    for c in 0..lay.inv_at {
                        gradient[c] += d_mean * dmu[c] + d_var * dsig_t[c];
                    }
                }
            } else {
                sum_sq += eps * eps;
                if want_grad {
                    for c in 0..lay.inv_at {
                        gradient[c] += eps * dmu[c];
                    }
                }
            }
        }
    }

    if objective == Objective::Gaussian && garch.is_none() {
        let tf = t_len as f64;
        if !(sum_sq > 0.0) {
            return Err(Error::Numerical("residual sum of squares is zero".into()));
        }
        value = -0.5 * tf * (LN_2PI + (sum_sq / tf).ln() + 1.0);
        for g in gradient.iter_mut() {
            *g *= tf / sum_sq;
        }
    }
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "objective value {value} is not finite"
        )));
    }
    Ok((
        Evaluation {
            value,
            gradient: want_grad.then_some(gradient),
        },
        out,
    ))
}

/// σ̄² for the pre-sample and its derivative with respect to (ω, α, β).
fn presample_variance(theta: &ParamVector, series: &Series, lay: &Layout) -> (f64, Vec<f64>) {
    match &theta.garch {
        Some(g) => {
            let persistence = g.persistence();
            if persistence < 1.0 {
                let gap = 1.0 - persistence;
                let sbar = g.omega / gap;
                let mut d = vec![sbar / g.omega; 1 + lay.r + lay.s];
                for v in d.iter_mut().skip(1) {
                    *v = g.omega / (gap * gap);
                }
                (sbar, d)
            } else {
                (series.var_h(), vec![0.0; 1 + lay.r + lay.s])
            }
        }
        None => (series.var_h(), vec![]),
    }
}

/// dμ_t and dσ²_t at extended index `i` from the stored lagged derivatives.
#[allow(clippy::too_many_arguments)]
fn propagate(
    lay: &Layout,
    theta: &ParamVector,
    h_ext: &[f64],
    eps_ext: &[f64],
    epssq_ext: &[f64],
    sig_ext: &[f64],
    deps: &[f64],
    depssq: &[f64],
    dsig: &[f64],
    i: usize,
    dmu: &mut [f64],
    dsig_t: &mut [f64],
) {
    let k = lay.k;
    dmu.iter_mut().for_each(|v| *v = 0.0);
    dsig_t.iter_mut().for_each(|v| *v = 0.0);
    dmu[0] = 1.0;
    for j in 0..lay.p {
        dmu[1 + j] = h_ext[i - 1 - j];
    }
    for j in 0..lay.q {
        dmu[1 + lay.p + j] += eps_ext[i - 1 - j];
        let delta = theta.arma.ma[j];
        let row = (i - 1 - j) * k;
        for c in 0..k {
            dmu[c] += delta * deps[row + c];
        }
    }
    if let Some(g) = &theta.garch {
        let base = lay.garch_at;
        dsig_t[base] = 1.0;
        for j in 0..lay.r {
            dsig_t[base + 1 + j] += epssq_ext[i - 1 - j];
            let alpha = g.alpha[j];
            let row = (i - 1 - j) * k;
            for c in 0..k {
                dsig_t[c] += alpha * depssq[row + c];
            }
        }
        for j in 0..lay.s {
            dsig_t[base + 1 + lay.r + j] += sig_ext[i - 1 - j];
            let beta = g.beta[j];
            let row = (i - 1 - j) * k;
            for c in 0..k {
                dsig_t[c] += beta * dsig[row + c];
            }
        }
    }
}


#[cfg(test)]
mod gradient_tests {
    use super::*;
    use crate::linkmap::Family;
    use crate::model::ModelSpec;

    fn check(theta: &ParamVector, series: &Series, objective: Objective) {
        let spec = ModelSpec::new(theta.family.kind(), theta.orders()).unwrap();
        let init = InitPolicy::SampleMean;
        let got = evaluate(theta, series, &init, objective, true).unwrap();
        let g = got.gradient.unwrap();
        let flat = theta.flatten();
        for c in 0..flat.len() {
            let h = 1e-6 * flat[c].abs().max(0.1);
            let mut up = flat.clone();
            up[c] += h;
            let mut dn = flat.clone();
            dn[c] -= h;
            let f = |v: &[f64]| {
                let th = ParamVector::from_flat(&spec, v).unwrap();
                evaluate(&th, series, &init, objective, false)
                    .unwrap()
                    .value
            };
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            assert!(
                (g[c] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                "{objective:?} {:?} component {c}: analytic {} vs fd {fd}",
                theta.family,
                g[c]
            );
        }
    }

    fn wave(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n)
            .map(|i| f(((i * 7919) % 101) as f64 / 101.0))
            .collect()
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let y = wave(80, |u| 0.3 + 2.0 * u);
        let s = Series::new(FamilyKind::LogGamma, y).unwrap();
        let th = ParamVector::garma_garch(
            0.05,
            vec![0.6, 0.1],
            vec![-0.3],
            0.05,
            vec![0.1, 0.05],
            vec![0.7],
            Family::LogGamma,
        );
        check(&th, &s, Objective::Likelihood);
        check(&th, &s, Objective::Gaussian);

        let y = wave(80, |u| 0.1 + 0.8 * u);
        let s = Series::new(FamilyKind::LogitBeta, y).unwrap();
        let th = ParamVector::garma_garch(
            -0.1,
            vec![0.5],
            vec![-0.2, 0.1],
            0.1,
            vec![0.3],
            vec![0.4],
            Family::LogitBeta,
        );
        check(&th, &s, Objective::Likelihood);
        let mg = ParamVector::mgarma(
            -0.1,
            vec![0.5],
            vec![-0.2],
            Family::LogitBetaFixedPrecision { precision: 8.0 },
        );
        check(&mg, &s, Objective::Likelihood);
        check(&mg, &s, Objective::Gaussian);

        let y = wave(80, |u| 3.0 * (u - 0.4));
        let s = Series::new(FamilyKind::Ghsst, y).unwrap();
        let th = ParamVector::garma_garch(
            0.1,
            vec![0.3],
            vec![0.2],
            0.2,
            vec![0.1],
            vec![0.6, 0.1],
            Family::Ghsst {
                dof: 7.0,
                skew: -0.3,
            },
        );
        check(&th, &s, Objective::Likelihood);

        let y = wave(80, |u| 0.3 + 2.0 * u);
        let s = Series::new(FamilyKind::LogGamma, y).unwrap();
        let mg = ParamVector::mgarma(
            0.05,
            vec![0.6],
            vec![-0.3],
            Family::LogGammaFixedShape { shape: 3.0 },
        );
        check(&mg, &s, Objective::Likelihood);
    }
}
