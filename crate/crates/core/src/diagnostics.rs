//! Residual diagnostics for fitted models: portmanteau tests, normality,
//! fit size and probability-integral-transform checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::engine::{filter, FilterOutput, InitPolicy, Series};
use crate::error::{Error, Result};
use crate::estimate::{information_criteria, FitReport};
use crate::linkmap::Family;
use crate::model::{ModelSpec, ParamVector};

/// A test statistic with its chi-square p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

/// A diagnostic that may be unavailable for the given input; serialized
/// with an explicit marker either way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Diagnostic<T> {
    Available { value: T },
    Unavailable { reason: String },
}

impl<T> Diagnostic<T> {
    pub fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(value) => Diagnostic::Available { value },
            Err(e) => Diagnostic::Unavailable {
                reason: e.to_string(),
            },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Diagnostic::Available { value } => Some(value),
            Diagnostic::Unavailable { .. } => None,
        }
    }
}

fn chi_square_sf(statistic: f64, df: f64) -> f64 {
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    dist.sf(statistic).clamp(0.0, 1.0)
}

/// Sample autocorrelations ρ̂_1..ρ̂_m (denominator T, mean removed).
pub fn autocorrelations(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::Unavailable("empty series".into()));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::Unavailable(
            "series has zero or non-finite variance".into(),
        ));
    }
    Ok((1..=max_lag)
        .map(|j| {
            let cj: f64 = (j..n).map(|t| (x[t] - mean) * (x[t - j] - mean)).sum();
            cj / c0
        })
        .collect())
}

/// Ljung–Box Q(m) = T(T+2) Σ ρ̂_j²/(T−j), referred to χ² with
/// max(1, m − fitted_df) degrees of freedom.
pub fn ljung_box(residuals: &[f64], lag: usize, fitted_df: usize) -> Result<TestResult> {
    let n = residuals.len();
    if lag == 0 {
        return Err(Error::Unavailable("lag must be at least 1".into()));
    }
    if n <= lag + 1 {
        return Err(Error::Unavailable(format!(
            "series of length {n} too short for lag {lag}"
        )));
    }
    let rho = autocorrelations(residuals, lag)?;
    let nf = n as f64;
    let statistic = nf
        * (nf + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * r / (nf - (i + 1) as f64))
            .sum::<f64>();
    let df = lag.saturating_sub(fitted_df).max(1) as f64;
    Ok(TestResult {
        statistic,
        p_value: chi_square_sf(statistic, df),
        df,
    })
}

/// McLeod–Li test: Ljung–Box applied to squared standardized residuals.
pub fn mcleod_li(standardized: &[f64], lag: usize, fitted_df: usize) -> Result<TestResult> {
    let sq: Vec<f64> = standardized.iter().map(|e| e * e).collect();
    ljung_box(&sq, lag, fitted_df)
}

/// Jarque–Bera JB = T(S²/6 + (K−3)²/24) with moment estimators, χ²₂.
pub fn jarque_bera(residuals: &[f64]) -> Result<TestResult> {
    let n = residuals.len();
    if n < 8 {
        return Err(Error::Unavailable(format!(
            "Jarque-Bera needs at least 8 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let m = |k: i32| residuals.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / nf;
    let m2 = m(2);
    if !(m2 > 0.0) {
        return Err(Error::Unavailable("residuals have zero variance".into()));
    }
    let skew = m(3) / m2.powf(1.5);
    let kurt = m(4) / (m2 * m2);
    let statistic = nf * (skew * skew / 6.0 + (kurt - 3.0).powi(2) / 24.0);
    Ok(TestResult {
        statistic,
        p_value: chi_square_sf(statistic, 2.0),
        df: 2.0,
    })
}

/// Σ (y_t − ŷ_t)², the plain residual sum of squares on the observation scale.
pub fn rss(y: &[f64], fitted: &[f64]) -> f64 {
    y.iter().zip(fitted).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Probability integral transforms ν̂_t = F(y_t | γ̂_t).
pub fn pit_values(family: &Family, output: &FilterOutput, series: &Series) -> Result<Vec<f64>> {
    if output.gamma.len() != series.len() {
        return Err(Error::Data(format!(
            "filter output has {} points but the series has {}",
            output.gamma.len(),
            series.len()
        )));
    }
    series
        .y()
        .iter()
        .zip(&output.gamma)
        .enumerate()
        .map(|(t, (&y, g))| family.cdf(g, y).map_err(|e| e.at_time(t + 1)))
        .collect()
}

/// P-P plot pairs: plotting positions (i − 0.5)/T against sorted ν̂.
pub fn pp_data(family: &Family, output: &FilterOutput, series: &Series) -> Result<Vec<(f64, f64)>> {
    let mut nu = pit_values(family, output, series)?;
    if nu.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::Unavailable(
            "all probability transforms are equal".into(),
        ));
    }
    nu.sort_by(f64::total_cmp);
    let n = nu.len() as f64;
    Ok(nu
        .into_iter()
        .enumerate()
        .map(|(i, v)| ((i as f64 + 0.5) / n, v))
        .collect())
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `u` and U(0,1).
pub fn ks_uniform(u: &[f64]) -> f64 {
    let mut v = u.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Default portmanteau lags.
pub const DEFAULT_LAGS: [usize; 3] = [1, 5, 22];

/// Diagnostics of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    /// Σ (y_t − ŷ_t)² with ŷ_t the conditional mean of y_t.
    pub rss: f64,
    /// Jarque–Bera on the standardized residuals.
    pub jb: Diagnostic<TestResult>,
    /// Ljung–Box on standardized residuals, degrees of freedom reduced by
    /// the number of ARMA coefficients.
    pub q: BTreeMap<usize, Diagnostic<TestResult>>,
    /// McLeod–Li on squared standardized residuals, degrees of freedom
    /// reduced by the number of GARCH coefficients.
    pub q2: BTreeMap<usize, Diagnostic<TestResult>>,
    pub df_convention: String,
    pub pp_points: Diagnostic<Vec<(f64, f64)>>,
    pub ks_distance: Option<f64>,
}

/// Filters the series at the fitted parameters and computes every diagnostic.
pub fn diagnose(
    report: &FitReport,
    series: &Series,
    init: &InitPolicy,
    lags: &[usize],
) -> Result<(DiagnosticsReport, FilterOutput)> {
    let output = filter(&report.theta, series, init)?;
    let mut d = diagnostics_of(&report.spec, &report.theta, &output, series, lags)?;
    (d.loglik, d.aic, d.bic) = (report.loglik, report.aic, report.bic);
    Ok((d, output))
}

/// Diagnostics at a given parameter vector rather than a fit. The
/// likelihood and information criteria are evaluated at `theta`.
pub fn diagnose_at(
    theta: &ParamVector,
    series: &Series,
    init: &InitPolicy,
    lags: &[usize],
) -> Result<(DiagnosticsReport, FilterOutput)> {
    let spec = ModelSpec::new(theta.family.kind(), theta.orders())?;
    theta.validate(&spec)?;
    let output = filter(theta, series, init)?;
    let mut d = diagnostics_of(&spec, theta, &output, series, lags)?;
    let ll = output.loglik();
    let (aic, bic) = information_criteria(ll, spec.n_params() as f64, series.len() as f64);
    (d.loglik, d.aic, d.bic) = (Some(ll), Some(aic), Some(bic));
    Ok((d, output))
}

fn diagnostics_of(
    spec: &ModelSpec,
    theta: &ParamVector,
    output: &FilterOutput,
    series: &Series,
    lags: &[usize],
) -> Result<DiagnosticsReport> {
    let family = theta.family;
    let fitted = output
        .gamma
        .iter()
        .map(|g| family.conditional_mean_of_y(g))
        .collect::<Result<Vec<_>>>()?;
    let std_resid = output.standardized_residuals();
    let o = spec.orders;
    let arma_df = o.p + o.q;
    let garch_df = if spec.is_mgarma() { 0 } else { o.r + o.s };
    let q = lags
        .iter()
        .map(|&m| {
            (
                m,
                Diagnostic::from_result(ljung_box(&std_resid, m, arma_df)),
            )
        })
        .collect();
    let q2 = lags
        .iter()
        .map(|&m| {
            (
                m,
                Diagnostic::from_result(mcleod_li(&std_resid, m, garch_df)),
            )
        })
        .collect();
    let pp = Diagnostic::from_result(pp_data(&family, output, series));
    let ks_distance = pp
        .value()
        .map(|pts| ks_uniform(&pts.iter().map(|p| p.1).collect::<Vec<_>>()));
    Ok(DiagnosticsReport {
        loglik: None,
        aic: None,
        bic: None,
        rss: rss(series.y(), &fitted),
        jb: Diagnostic::from_result(jarque_bera(&std_resid)),
        q,
        q2,
        df_convention: format!(
            "Q(m) uses max(1, m - {arma_df}) degrees of freedom, Q2(m) uses max(1, m - {garch_df})"
        ),
        pp_points: pp,
        ks_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_series() {
        let x: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let rho = autocorrelations(&x, 1).unwrap()[0];
        assert!((rho + 0.99).abs() < 1e-12);
        let q = ljung_box(&x, 1, 0).unwrap();
        assert!((q.statistic - 100.0 * 102.0 * rho * rho / 99.0).abs() < 1e-9);
    }

    #[test]
    fn constant_series_is_unavailable() {
        assert!(matches!(
            ljung_box(&[2.0; 50], 5, 0),
            Err(Error::Unavailable(_))
        ));
        assert!(matches!(
            mcleod_li(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0], 2, 0),
            Err(Error::Unavailable(_))
        ));
    }

    #[test]
    fn symmetric_mesokurtic_sample() {
        // skewness 0 and kurtosis 3: ±a with weight w, 0 otherwise, w a^4/(w a^2)^2 = 1/w = 3
        let mut x = vec![0.0; 4];
        x.extend([1.0, -1.0]);
        let jb = jarque_bera(&[x.clone(), x.clone()].concat()).unwrap();
        assert!(jb.statistic.abs() < 1e-12 && (jb.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rss_cases() {
        assert_eq!(rss(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(rss(&[3.0], &[1.0]), 4.0);
    }

    #[test]
    fn ks_of_plotting_positions() {
        let u: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&u) - 0.005).abs() < 1e-12);
    }
}
