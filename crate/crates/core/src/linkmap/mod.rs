//! Distribution families of the GARMA-GARCH framework.
//!
//! Each family pairs a conditional distribution `f(y | γ_t, φ)` with a y-link
//! `h`. The mean and variance links map the time-varying parameter γ_t to the
//! conditional mean μ_t and variance σ²_t of `h(y_t)`; [`Family::solve_gamma`]
//! inverts that map.
//!
//! Two fixed-parameter baselines (the M-GARMA models) are also represented:
//! their γ_t is one-dimensional and is determined by μ_t alone.

mod beta;
mod gamma;
mod ghsst;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three distribution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    LogGamma,
    LogitBeta,
    Ghsst,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::LogGamma => "log-gamma",
            FamilyKind::LogitBeta => "logit-beta",
            FamilyKind::Ghsst => "ghsst",
        }
    }

    /// The y-link `h`.
    pub fn y_link(self, y: f64) -> Result<f64> {
        match self {
            FamilyKind::LogGamma => {
                if y > 0.0 && y.is_finite() {
                    Ok(y.ln())
                } else {
                    Err(self.support_error(y))
                }
            }
            FamilyKind::LogitBeta => {
                if y > 0.0 && y < 1.0 {
                    Ok((y / (1.0 - y)).ln())
                } else {
                    Err(self.support_error(y))
                }
            }
            FamilyKind::Ghsst => {
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(self.support_error(y))
                }
            }
        }
    }

    /// Inverse of the y-link.
    pub fn y_link_inverse(self, h: f64) -> f64 {
        match self {
            FamilyKind::LogGamma => h.exp(),
            FamilyKind::LogitBeta => 1.0 / (1.0 + (-h).exp()),
            FamilyKind::Ghsst => h,
        }
    }

    pub(crate) fn support_error(self, value: f64) -> Error {
        let support = match self {
            FamilyKind::LogGamma => "y > 0",
            FamilyKind::LogitBeta => "0 < y < 1",
            FamilyKind::Ghsst => "y finite",
        };
        Error::Support {
            family: self,
            value,
            support,
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "log-gamma" | "loggamma" | "gamma" => Ok(FamilyKind::LogGamma),
            "logit-beta" | "logitbeta" | "beta" => Ok(FamilyKind::LogitBeta),
            "ghsst" | "skew-t" => Ok(FamilyKind::Ghsst),
            other => Err(Error::Spec(format!("unknown family '{other}'"))),
        }
    }
}

/// A family together with its time-invariant parameters φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Gamma(c_t, c_t/η_t) with log link; no invariant parameters.
    LogGamma,
    /// Beta(a_t, b_t) with logit link; no invariant parameters.
    LogitBeta,
    /// Generalized hyperbolic skew Student-t with identity link.
    Ghsst { dof: f64, skew: f64 },
    /// log-Gamma M-GARMA baseline: shape `c` fixed, only η_t varies.
    LogGammaFixedShape { shape: f64 },
    /// logit-Beta M-GARMA baseline: a_t + b_t fixed at `precision`.
    LogitBetaFixedPrecision { precision: f64 },
}

/// The time-varying distribution parameter γ_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeVarying {
    /// Shape c_t and mean η_t of a Gamma(c_t, c_t/η_t) law.
    Gamma { shape: f64, mean: f64 },
    /// Beta(a_t, b_t).
    Beta { a: f64, b: f64 },
    /// GHSST location ξ_t and scale ς_t.
    Ghsst { location: f64, scale: f64 },
}

impl TimeVarying {
    /// The two components in a fixed order: (c, η), (a, b) or (ξ, ς).
    pub fn components(&self) -> (f64, f64) {
        match *self {
            TimeVarying::Gamma { shape, mean } => (shape, mean),
            TimeVarying::Beta { a, b } => (a, b),
            TimeVarying::Ghsst { location, scale } => (location, scale),
        }
    }
}

/// Conditional mean and variance of `h(y_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

impl MomentPair {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }
}

/// Log-likelihood of one observation and its partial derivatives with
/// respect to the conditional mean, the conditional variance and the
/// invariant parameters (in [`Family::invariant_params`] order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PointLik {
    pub value: f64,
    pub d_mean: f64,
    pub d_variance: f64,
    pub d_invariant: [f64; 2],
}

impl Family {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::LogGamma | Family::LogGammaFixedShape { .. } => FamilyKind::LogGamma,
            Family::LogitBeta | Family::LogitBetaFixedPrecision { .. } => FamilyKind::LogitBeta,
            Family::Ghsst { .. } => FamilyKind::Ghsst,
        }
    }

    /// True for the M-GARMA baselines, whose γ_t is pinned by μ_t alone.
    pub fn is_fixed_baseline(&self) -> bool {
        matches!(
            self,
            Family::LogGammaFixedShape { .. } | Family::LogitBetaFixedPrecision { .. }
        )
    }

    pub fn ghsst(dof: f64, skew: f64) -> Result<Self> {
        let f = Family::Ghsst { dof, skew };
        f.validate()?;
        Ok(f)
    }

    /// Checks the invariant-parameter constraints.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::LogGamma | Family::LogitBeta => Ok(()),
            Family::Ghsst { dof, skew } => {
                if !(dof > 4.0) || !dof.is_finite() {
                    Err(Error::domain(
                        "ghsst",
                        format!(
                            "degrees of freedom must exceed 4 for a finite variance, got {dof}"
                        ),
                    ))
                } else if !skew.is_finite() {
                    Err(Error::domain(
                        "ghsst",
                        format!("skewness must be finite, got {skew}"),
                    ))
                } else {
                    Ok(())
                }
            }
            Family::LogGammaFixedShape { shape } => {
                if shape > 0.0 && shape.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(
                        "log-gamma baseline",
                        format!("shape must be positive, got {shape}"),
                    ))
                }
            }
            Family::LogitBetaFixedPrecision { precision } => {
                if precision > 0.0 && precision.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(
                        "logit-beta baseline",
                        format!("precision must be positive, got {precision}"),
                    ))
                }
            }
        }
    }

    /// Values of φ, in a fixed order.
    pub fn invariant_params(&self) -> Vec<f64> {
        match *self {
            Family::LogGamma | Family::LogitBeta => vec![],
            Family::Ghsst { dof, skew } => vec![dof, skew],
            Family::LogGammaFixedShape { shape } => vec![shape],
            Family::LogitBetaFixedPrecision { precision } => vec![precision],
        }
    }

    pub fn invariant_names(&self) -> &'static [&'static str] {
        match self {
            Family::LogGamma | Family::LogitBeta => &[],
            Family::Ghsst { .. } => &["nu", "tau"],
            Family::LogGammaFixedShape { .. } => &["c"],
            Family::LogitBetaFixedPrecision { .. } => &["tau"],
        }
    }

    /// The same family with φ replaced by `values`.
    pub fn with_invariant_params(&self, values: &[f64]) -> Result<Self> {
        let expected = self.invariant_names().len();
        if values.len() != expected {
            return Err(Error::Params(format!(
                "{} expects {expected} invariant parameters, got {}",
                self.kind(),
                values.len()
            )));
        }
        let f = match *self {
            Family::LogGamma => Family::LogGamma,
            Family::LogitBeta => Family::LogitBeta,
            Family::Ghsst { .. } => Family::Ghsst {
                dof: values[0],
                skew: values[1],
            },
            Family::LogGammaFixedShape { .. } => Family::LogGammaFixedShape { shape: values[0] },
            Family::LogitBetaFixedPrecision { .. } => Family::LogitBetaFixedPrecision {
                precision: values[0],
            },
        };
        f.validate()?;
        Ok(f)
    }

    /// The y-link `h` of this family.
    pub fn y_link(&self, y: f64) -> Result<f64> {
        self.kind().y_link(y)
    }

    /// The mean and variance links `(g_φ(γ), V_φ(γ))`.
    pub fn mean_var_links(&self, gamma: &TimeVarying) -> Result<MomentPair> {
        match (*self, *gamma) {
            (Family::LogGamma, TimeVarying::Gamma { shape, mean })
            | (Family::LogGammaFixedShape { .. }, TimeVarying::Gamma { shape, mean }) => {
                gamma::check(shape, mean)?;
                Ok(gamma::links(shape, mean))
            }
            (Family::LogitBeta, TimeVarying::Beta { a, b })
            | (Family::LogitBetaFixedPrecision { .. }, TimeVarying::Beta { a, b }) => {
                beta::check(a, b)?;
                Ok(beta::links(a, b))
            }
            (Family::Ghsst { dof, skew }, TimeVarying::Ghsst { location, scale }) => {
                self.validate()?;
                ghsst::check(scale)?;
                Ok(ghsst::links(dof, skew, location, scale))
            }
            _ => Err(self.mismatch(gamma)),
        }
    }

    /// Recovers γ_t from (μ_t, σ²_t). The M-GARMA baselines use μ_t only.
    pub fn solve_gamma(&self, mp: MomentPair) -> Result<TimeVarying> {
        self.solve_gamma_from(mp, None)
    }

    /// As [`Family::solve_gamma`], with an optional starting point for the
    /// iterative solvers (the logit-Beta family uses it as a warm start).
    pub fn solve_gamma_from(
        &self,
        mp: MomentPair,
        start: Option<TimeVarying>,
    ) -> Result<TimeVarying> {
        if !mp.mean.is_finite() {
            return Err(Error::Solve {
                family: self.kind(),
                mean: mp.mean,
                variance: mp.variance,
            });
        }
        match *self {
            Family::LogGamma => gamma::solve(mp),
            Family::LogGammaFixedShape { shape } => Ok(gamma::solve_fixed_shape(shape, mp.mean)),
            Family::LogitBeta => {
                let start = match start {
                    Some(TimeVarying::Beta { a, b }) => Some((a, b)),
                    _ => None,
                };
                beta::solve(mp, start)
            }
            Family::LogitBetaFixedPrecision { precision } => {
                beta::solve_fixed_precision(precision, mp.mean)
            }
            Family::Ghsst { dof, skew } => {
                self.validate()?;
                ghsst::solve(dof, skew, mp)
            }
        }
    }

    /// `log f(y | γ, φ)`.
    pub fn log_density(&self, gamma: &TimeVarying, y: f64) -> Result<f64> {
        self.y_link(y)?;
        match (*self, *gamma) {
            (Family::LogGamma, TimeVarying::Gamma { shape, mean })
            | (Family::LogGammaFixedShape { .. }, TimeVarying::Gamma { shape, mean }) => {
                gamma::check(shape, mean)?;
                Ok(gamma::log_density(shape, mean, y))
            }
            (Family::LogitBeta, TimeVarying::Beta { a, b })
            | (Family::LogitBetaFixedPrecision { .. }, TimeVarying::Beta { a, b }) => {
                beta::check(a, b)?;
                Ok(beta::log_density(a, b, y))
            }
            (Family::Ghsst { dof, skew }, TimeVarying::Ghsst { location, scale }) => {
                self.validate()?;
                ghsst::check(scale)?;
                ghsst::log_density(dof, skew, location, scale, y)
            }
            _ => Err(self.mismatch(gamma)),
        }
    }

    /// `F(y | γ, φ)`: regularized incomplete gamma and beta functions for the
    /// log-Gamma and logit-Beta families, quadrature for GHSST.
    pub fn cdf(&self, gamma: &TimeVarying, y: f64) -> Result<f64> {
        self.y_link(y)?;
        match (*self, *gamma) {
            (Family::LogGamma, TimeVarying::Gamma { shape, mean })
            | (Family::LogGammaFixedShape { .. }, TimeVarying::Gamma { shape, mean }) => {
                gamma::check(shape, mean)?;
                Ok(statrs::function::gamma::gamma_lr(shape, y * shape / mean))
            }
            (Family::LogitBeta, TimeVarying::Beta { a, b })
            | (Family::LogitBetaFixedPrecision { .. }, TimeVarying::Beta { a, b }) => {
                beta::check(a, b)?;
                Ok(statrs::function::beta::beta_reg(a, b, y))
            }
            (Family::Ghsst { dof, skew }, TimeVarying::Ghsst { location, scale }) => {
                self.validate()?;
                ghsst::check(scale)?;
                ghsst::cdf(dof, skew, location, scale, y)
            }
            _ => Err(self.mismatch(gamma)),
        }
    }

    /// One draw from `f(· | γ, φ)`.
    ///
    /// Gamma draws use `rand_distr::Gamma` (Marsaglia–Tsang), Beta draws use
    /// `rand_distr::Beta` (Cheng), and GHSST draws use the normal
    /// mean-variance mixture `ξ + τW + √W Z` with `W ~ InvGamma(ν/2, ς²/2)`.
    /// Draws landing on the boundary of the support in floating point are
    /// redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, gamma: &TimeVarying, rng: &mut R) -> Result<f64> {
        match (*self, *gamma) {
            (Family::LogGamma, TimeVarying::Gamma { shape, mean })
            | (Family::LogGammaFixedShape { .. }, TimeVarying::Gamma { shape, mean }) => {
                gamma::check(shape, mean)?;
                gamma::sample(shape, mean, rng)
            }
            (Family::LogitBeta, TimeVarying::Beta { a, b })
            | (Family::LogitBetaFixedPrecision { .. }, TimeVarying::Beta { a, b }) => {
                beta::check(a, b)?;
                beta::sample(a, b, rng)
            }
            (Family::Ghsst { dof, skew }, TimeVarying::Ghsst { location, scale }) => {
                self.validate()?;
                ghsst::check(scale)?;
                ghsst::sample(dof, skew, location, scale, rng)
            }
            _ => Err(self.mismatch(gamma)),
        }
    }

    /// E[y_t | F_{t-1}] on the observation scale.
    pub fn conditional_mean_of_y(&self, gamma: &TimeVarying) -> Result<f64> {
        match (*self, *gamma) {
            (_, TimeVarying::Gamma { mean, .. }) if self.kind() == FamilyKind::LogGamma => Ok(mean),
            (_, TimeVarying::Beta { a, b }) if self.kind() == FamilyKind::LogitBeta => {
                Ok(a / (a + b))
            }
            (Family::Ghsst { dof, skew }, TimeVarying::Ghsst { location, scale }) => {
                Ok(location + skew * scale * scale / (dof - 2.0))
            }
            _ => Err(self.mismatch(gamma)),
        }
    }

    /// Log-likelihood of `y` at the moments `mp`, with γ solved internally.
    /// `gamma_hint` carries the previous solution between calls and is
    /// updated in place.
    pub(crate) fn point_loglik(
        &self,
        y: f64,
        mp: MomentPair,
        gamma_hint: &mut Option<TimeVarying>,
        want_grad: bool,
    ) -> Result<PointLik> {
        let gamma = self.solve_gamma_from(mp, *gamma_hint)?;
        *gamma_hint = Some(gamma);
        self.point_loglik_at(y, &gamma, want_grad)
    }

    /// As [`Family::point_loglik`] with γ already solved.
    pub(crate) fn point_loglik_at(
        &self,
        y: f64,
        gamma: &TimeVarying,
        want_grad: bool,
    ) -> Result<PointLik> {
        match (*self, *gamma) {
            (Family::LogGamma, TimeVarying::Gamma { shape, mean }) => {
                gamma::point_loglik(shape, mean, y, want_grad, false)
            }
            (Family::LogGammaFixedShape { .. }, TimeVarying::Gamma { shape, mean }) => {
                gamma::point_loglik(shape, mean, y, want_grad, true)
            }
            (Family::LogitBeta, TimeVarying::Beta { a, b }) => {
                beta::point_loglik(a, b, y, want_grad)
            }
            (Family::LogitBetaFixedPrecision { .. }, TimeVarying::Beta { a, b }) => {
                beta::point_loglik_fixed_precision(a, b, y, want_grad)
            }
            (Family::Ghsst { dof, skew }, TimeVarying::Ghsst { location, scale }) => {
                ghsst::point_loglik(dof, skew, location, scale, y, want_grad)
            }
            _ => Err(self.mismatch(gamma)),
        }
    }

    fn mismatch(&self, gamma: &TimeVarying) -> Error {
        Error::Params(format!(
            "time-varying parameter {gamma:?} does not belong to the {} family",
            self.kind()
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{digamma, trigamma, EULER_GAMMA};
    use std::f64::consts::PI;

    #[test]
    fn y_links() {
        assert_eq!(FamilyKind::LogGamma.y_link(1.0).unwrap(), 0.0);
        assert_eq!(FamilyKind::LogitBeta.y_link(0.5).unwrap(), 0.0);
        assert_eq!(FamilyKind::Ghsst.y_link(-3.2).unwrap(), -3.2);
    }

    #[test]
    fn y_link_support_errors_name_the_family() {
        let err = FamilyKind::LogGamma.y_link(0.0).unwrap_err();
        assert!(matches!(
            err,
            Error::Support {
                family: FamilyKind::LogGamma,
                ..
            }
        ));
        assert!(err.to_string().contains("log-gamma"));
        assert!(FamilyKind::LogitBeta.y_link(1.0).is_err());
        assert!(FamilyKind::LogitBeta.y_link(-0.1).is_err());
        assert!(FamilyKind::Ghsst.y_link(f64::NAN).is_err());
    }

    #[test]
    fn mean_var_links_known_values() {
        let mp = Family::LogGamma
            .mean_var_links(&TimeVarying::Gamma {
                shape: 1.0,
                mean: EULER_GAMMA.exp(),
            })
            .unwrap();
        assert!(mp.mean.abs() < 1e-14);
        assert!((mp.variance - PI * PI / 6.0).abs() < 1e-14);

        let mp = Family::LogitBeta
            .mean_var_links(&TimeVarying::Beta { a: 1.0, b: 1.0 })
            .unwrap();
        assert_eq!(mp.mean, 0.0);
        assert!((mp.variance - PI * PI / 3.0).abs() < 1e-14);

        let fam = Family::ghsst(6.0, 0.0).unwrap();
        let mp = fam
            .mean_var_links(&TimeVarying::Ghsst {
                location: 0.0,
                scale: 2.0,
            })
            .unwrap();
        assert_eq!(mp.mean, 0.0);
        assert!((mp.variance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_examples() {
        let g = Family::LogGamma
            .solve_gamma(MomentPair::new(0.3, trigamma(2.0)))
            .unwrap();
        let (c, eta) = g.components();
        assert!((c - 2.0).abs() < 1e-12);
        assert!((eta - (0.3 + 2f64.ln() - digamma(2.0)).exp()).abs() < 1e-12);

        let mp = MomentPair::new(digamma(2.0) - digamma(3.0), trigamma(2.0) + trigamma(3.0));
        let (a, b) = Family::LogitBeta.solve_gamma(mp).unwrap().components();
        assert!((a - 2.0).abs() < 1e-9 && (b - 3.0).abs() < 1e-9);

        let fam = Family::ghsst(6.0, 0.0).unwrap();
        let (xi, sc) = fam
            .solve_gamma(MomentPair::new(0.0, 1.0))
            .unwrap()
            .components();
        assert_eq!(xi, 0.0);
        assert!((sc - 2.0).abs() < 1e-15);

        let fam = Family::ghsst(7.0, -0.2).unwrap();
        let g = fam.solve_gamma(MomentPair::new(0.0, 1.0)).unwrap();
        let back = fam.mean_var_links(&g).unwrap();
        assert!(back.mean.abs() < 1e-12 && (back.variance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghsst_requires_finite_variance() {
        assert!(Family::ghsst(4.0, 0.1).is_err());
        let bad = Family::Ghsst {
            dof: 3.0,
            skew: 0.0,
        };
        assert!(matches!(
            bad.solve_gamma(MomentPair::new(0.0, 1.0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn log_density_known_values() {
        let v = Family::LogGamma
            .log_density(
                &TimeVarying::Gamma {
                    shape: 1.0,
                    mean: 1.0,
                },
                1.0,
            )
            .unwrap();
        assert!((v + 1.0).abs() < 1e-14);
        let v = Family::LogitBeta
            .log_density(&TimeVarying::Beta { a: 1.0, b: 1.0 }, 0.7)
            .unwrap();
        assert!(v.abs() < 1e-14);
        assert!(Family::LogitBeta
            .log_density(&TimeVarying::Beta { a: 1.0, b: 1.0 }, 1.2)
            .is_err());
    }

    #[test]
    fn mismatched_gamma_is_rejected() {
        let g = TimeVarying::Beta { a: 1.0, b: 2.0 };
        assert!(Family::LogGamma.log_density(&g, 1.0).is_err());
        assert!(Family::LogGamma.mean_var_links(&g).is_err());
    }

    #[test]
    fn invariant_params_round_trip() {
        let f = Family::ghsst(7.0, -0.2).unwrap();
        assert_eq!(f.invariant_params(), vec![7.0, -0.2]);
        let g = f.with_invariant_params(&[9.0, 0.1]).unwrap();
        assert_eq!(
            g,
            Family::Ghsst {
                dof: 9.0,
                skew: 0.1
            }
        );
        assert!(f.with_invariant_params(&[3.0, 0.1]).is_err());
        assert!(Family::LogGamma.with_invariant_params(&[1.0]).is_err());
    }

    #[test]
    fn baselines_solve_from_mean_only() {
        let fam = Family::LogGammaFixedShape { shape: 2.5 };
        let g = fam.solve_gamma(MomentPair::new(0.4, f64::NAN)).unwrap();
        let back = fam.mean_var_links(&g).unwrap();
        assert!((back.mean - 0.4).abs() < 1e-12);
        assert!((back.variance - trigamma(2.5)).abs() < 1e-14);

        let fam = Family::LogitBetaFixedPrecision { precision: 60.0 };
        let g = fam.solve_gamma(MomentPair::new(-1.2, f64::NAN)).unwrap();
        let (a, b) = g.components();
        assert!((a + b - 60.0).abs() < 1e-10);
        assert!((fam.mean_var_links(&g).unwrap().mean + 1.2).abs() < 1e-10);
    }

    /// Central-difference check of the analytic per-observation derivatives.
    fn check_point_gradient(family: Family, y: f64, mp: MomentPair) {
        let eval =
            |fam: Family, mp: MomentPair| fam.point_loglik(y, mp, &mut None, false).unwrap().value;
        let got = family.point_loglik(y, mp, &mut None, true).unwrap();
        let h = 1e-6;
        let fd_mean = (eval(family, MomentPair::new(mp.mean + h, mp.variance))
            - eval(family, MomentPair::new(mp.mean - h, mp.variance)))
            / (2.0 * h);
        assert!(
            (got.d_mean - fd_mean).abs() < 1e-6 * fd_mean.abs().max(1.0),
            "{family:?} d_mean {} vs {fd_mean}",
            got.d_mean
        );
        if !family.is_fixed_baseline() {
            let hv = h * mp.variance;
            let fd_var = (eval(family, MomentPair::new(mp.mean, mp.variance + hv))
                - eval(family, MomentPair::new(mp.mean, mp.variance - hv)))
                / (2.0 * hv);
            assert!(
                (got.d_variance - fd_var).abs() < 1e-5 * fd_var.abs().max(1.0),
                "{family:?} d_var {} vs {fd_var}",
                got.d_variance
            );
        }
        let phi = family.invariant_params();
        for i in 0..phi.len() {
            let hp = h * phi[i].abs().max(1.0);
            let mut up = phi.clone();
            up[i] += hp;
            let mut dn = phi.clone();
            dn[i] -= hp;
            let fd = (eval(family.with_invariant_params(&up).unwrap(), mp)
                - eval(family.with_invariant_params(&dn).unwrap(), mp))
                / (2.0 * hp);
            assert!(
                (got.d_invariant[i] - fd).abs() < 1e-5 * fd.abs().max(1.0),
                "{family:?} d_phi[{i}] {} vs {fd}",
                got.d_invariant[i]
            );
        }
    }

    #[test]
    fn point_gradients_match_finite_differences() {
        check_point_gradient(Family::LogGamma, 1.7, MomentPair::new(0.2, 0.5));
        check_point_gradient(Family::LogGamma, 0.05, MomentPair::new(-1.0, 3.0));
        check_point_gradient(Family::LogitBeta, 0.3, MomentPair::new(-0.4, 0.2));
        check_point_gradient(Family::LogitBeta, 0.9, MomentPair::new(1.0, 2.5));
        check_point_gradient(
            Family::LogGammaFixedShape { shape: 2.5 },
            0.8,
            MomentPair::new(0.1, f64::NAN),
        );
        check_point_gradient(
            Family::LogitBetaFixedPrecision { precision: 40.0 },
            0.35,
            MomentPair::new(-0.5, f64::NAN),
        );
        check_point_gradient(
            Family::Ghsst {
                dof: 7.0,
                skew: -0.2,
            },
            0.5,
            MomentPair::new(0.1, 1.3),
        );
        check_point_gradient(
            Family::Ghsst {
                dof: 5.5,
                skew: 0.6,
            },
            -2.0,
            MomentPair::new(0.3, 0.7),
        );
        check_point_gradient(
            Family::Ghsst {
                dof: 9.0,
                skew: 1e-7,
            },
            1.0,
            MomentPair::new(0.0, 1.0),
        );
    }
}
