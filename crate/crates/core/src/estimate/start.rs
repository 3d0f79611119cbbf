//! Starting values: Hannan–Rissanen ARMA regression and GARCH heuristics.

use nalgebra::{DMatrix, DVector};

use crate::engine::Series;
use crate::linkmap::{Family, MomentPair};
use crate::model::{ArmaParams, GarchParams, ModelSpec, ParamVector};
use crate::specfun::inv_trigamma;

/// Ordinary least squares through the normal equations; `None` if rank deficient.
fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    xtx.cholesky().map(|c| c.solve(&xty))
}

/// Shrinks AR or MA coefficients until their absolute sum is below 0.98,
/// a cheap guard against non-stationary or non-invertible starts.
fn shrink(coef: &mut [f64]) {
    let total: f64 = coef.iter().map(|c| c.abs()).sum();
    if total >= 0.98 {
        let f = 0.98 / total;
        coef.iter_mut().for_each(|c| *c *= f);
    }
}

/// Two-stage Hannan–Rissanen estimate of an ARMA(p, q) for h(y).
pub(super) fn hannan_rissanen(h: &[f64], p: usize, q: usize) -> ArmaParams {
    let n = h.len();
    let mean = h.iter().sum::<f64>() / n as f64;
    let fallback = ArmaParams {
        intercept: mean,
        ar: vec![0.0; p],
        ma: vec![0.0; q],
    };
    // Stage 1: long autoregression for the innovations.
    let long = if q > 0 {
        ((10.0 * (n as f64).log10()) as usize)
            .max(p + q + 2)
            .min(n / 4)
    } else {
        0
    };
    let resid: Vec<f64> = if q > 0 {
        let rows = n.saturating_sub(long);
        if rows <= long + 1 {
            return fallback;
        }
        let x = DMatrix::from_fn(
            rows,
            long + 1,
            |i, j| if j == 0 { 1.0 } else { h[long + i - j] },
        );
        let y = DVector::from_fn(rows, |i, _| h[long + i]);
        let Some(b) = ols(&x, &y) else {
            return fallback;
        };
        let fitted = &x * &b;
        let mut e = vec![0.0; n];
        for i in 0..rows {
            e[long + i] = y[i] - fitted[i];
        }
        e
    } else {
        vec![0.0; n]
    };
    // Stage 2: regress h_t on its lags and lagged innovations.
    let start = long + p.max(q);
    let rows = n.saturating_sub(start);
    if rows <= 1 + p + q {
        return fallback;
    }
    let x = DMatrix::from_fn(rows, 1 + p + q, |i, j| {
        let t = start + i;
        if j == 0 {
            1.0
        } else if j <= p {
            h[t - j]
        } else {
            resid[t - (j - p)]
        }
    });
    let y = DVector::from_fn(rows, |i, _| h[start + i]);
    let Some(b) = ols(&x, &y) else {
        return fallback;
    };
    let mut ar: Vec<f64> = (0..p).map(|j| b[1 + j]).collect();
    let mut ma: Vec<f64> = (0..q).map(|j| b[1 + p + j]).collect();
    if !ar.iter().chain(&ma).all(|v| v.is_finite()) {
        return fallback;
    }
    shrink(&mut ar);
    shrink(&mut ma);
    // keep the implied unconditional mean of h
    let intercept = mean * (1.0 - ar.iter().sum::<f64>());
    ArmaParams { intercept, ar, ma }
}

/// ARMA residuals with zero pre-sample innovations and pre-sample h equal to
/// the mean.
pub(super) fn arma_residuals(h: &[f64], arma: &ArmaParams) -> Vec<f64> {
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    let mut eps = vec![0.0; h.len()];
    for t in 0..h.len() {
        let mut mu = arma.intercept;
        for (j, phi) in arma.ar.iter().enumerate() {
            mu += phi * if t > j { h[t - 1 - j] } else { mean };
        }
        for (j, d) in arma.ma.iter().enumerate() {
            if t > j {
                mu += d * eps[t - 1 - j];
            }
        }
        eps[t] = h[t] - mu;
    }
    eps
}

/// GARCH start with persistence `alpha_total + beta_total` and ω matching
/// the residual variance.
pub(super) fn garch_start(
    spec: &ModelSpec,
    resid_var: f64,
    alpha_total: f64,
    beta_total: f64,
) -> GarchParams {
    let o = spec.orders;
    let beta_total = if o.s == 0 { 0.0 } else { beta_total };
    let alpha = vec![alpha_total / o.r as f64; o.r];
    let beta = vec![
        if o.s == 0 {
            0.0
        } else {
            beta_total / o.s as f64
        };
        o.s
    ];
    let omega = (resid_var * (1.0 - alpha_total - beta_total)).max(1e-8);
    GarchParams { omega, alpha, beta }
}

/// Moment-based invariant parameters from the residual variance.
pub(super) fn invariant_start(spec: &ModelSpec, mean_h: f64, resid_var: f64) -> Family {
    match spec.default_family() {
        Family::LogGammaFixedShape { .. } => Family::LogGammaFixedShape {
            shape: inv_trigamma(resid_var).unwrap_or(1.0),
        },
        Family::LogitBetaFixedPrecision { .. } => {
            let precision = Family::LogitBeta
                .solve_gamma(MomentPair::new(mean_h, resid_var))
                .map(|g| {
                    let (a, b) = g.components();
                    a + b
                })
                .unwrap_or(10.0);
            Family::LogitBetaFixedPrecision { precision }
        }
        f => f,
    }
}

/// Method-of-moments start: Hannan–Rissanen ARMA plus a persistent GARCH.
pub(super) fn moment_start(spec: &ModelSpec, series: &Series) -> ParamVector {
    let arma = hannan_rissanen(series.h(), spec.orders.p, spec.orders.q);
    let resid = arma_residuals(series.h(), &arma);
    let var = resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64;
    let var = if var > 0.0 { var } else { 1.0 };
    let garch = (!spec.is_mgarma()).then(|| garch_start(spec, var, 0.05, 0.90));
    let family = invariant_start(spec, series.mean_h(), var);
    ParamVector {
        arma,
        garch,
        family,
    }
}
