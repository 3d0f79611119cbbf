//! Model specification and parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmap::{Family, FamilyKind};

/// ARMA orders (p, q) of the conditional mean and GARCH orders (r, s) of the
/// conditional variance. r = s = 0 selects the M-GARMA baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orders {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
}

impl Orders {
    pub fn new(p: usize, q: usize, r: usize, s: usize) -> Self {
        Self { p, q, r, s }
    }

    /// Depth of the pre-sample needed by the recursions.
    pub fn max_lag(&self) -> usize {
        self.p.max(self.q).max(self.r).max(self.s)
    }

    pub fn has_garch(&self) -> bool {
        self.r + self.s > 0
    }
}

/// Family plus orders. The dynamics (GARMA-GARCH or M-GARMA) follow from the
/// orders: with r = s = 0 the family's invariant parameter absorbs the
/// second distribution parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: FamilyKind,
    pub orders: Orders,
}

impl ModelSpec {
    pub fn new(kind: FamilyKind, orders: Orders) -> Result<Self> {
        let o = orders;
        if o.p + o.q + o.r + o.s == 0 {
            return Err(Error::Spec(
                "at least one of p, q, r, s must be positive".into(),
            ));
        }
        if o.has_garch() && o.r == 0 {
            return Err(Error::Spec(
                "GARCH mode needs r >= 1; with r = 0 the variance recursion has no innovation"
                    .into(),
            ));
        }
        if !o.has_garch() && kind == FamilyKind::Ghsst {
            return Err(Error::Spec(
                "the GHSST family has no M-GARMA baseline; use r >= 1".into(),
            ));
        }
        Ok(Self { kind, orders })
    }

    pub fn is_mgarma(&self) -> bool {
        !self.orders.has_garch()
    }

    /// The family carrying default invariant parameters for this spec.
    pub fn default_family(&self) -> Family {
        match (self.kind, self.is_mgarma()) {
            (FamilyKind::LogGamma, false) => Family::LogGamma,
            (FamilyKind::LogitBeta, false) => Family::LogitBeta,
            (FamilyKind::Ghsst, _) => Family::Ghsst {
                dof: 8.0,
                skew: 0.0,
            },
            (FamilyKind::LogGamma, true) => Family::LogGammaFixedShape { shape: 1.0 },
            (FamilyKind::LogitBeta, true) => Family::LogitBetaFixedPrecision { precision: 10.0 },
        }
    }

    pub fn n_arma(&self) -> usize {
        1 + self.orders.p + self.orders.q
    }

    pub fn n_garch(&self) -> usize {
        if self.is_mgarma() {
            0
        } else {
            1 + self.orders.r + self.orders.s
        }
    }

    pub fn n_invariant(&self) -> usize {
        self.default_family().invariant_names().len()
    }

    pub fn n_params(&self) -> usize {
        self.n_arma() + self.n_garch() + self.n_invariant()
    }

    /// Parameter names in flattening order.
    pub fn param_names(&self) -> Vec<String> {
        let o = self.orders;
        let mut names = vec!["phi0".to_string()];
        names.extend((1..=o.p).map(|j| format!("phi{j}")));
        names.extend((1..=o.q).map(|j| format!("delta{j}")));
        if !self.is_mgarma() {
            names.push("omega".into());
            names.extend((1..=o.r).map(|j| format!("alpha{j}")));
            names.extend((1..=o.s).map(|j| format!("beta{j}")));
        }
        names.extend(
            self.default_family()
                .invariant_names()
                .iter()
                .map(|s| s.to_string()),
        );
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaParams {
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl GarchParams {
    /// Σα + Σβ.
    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// ω / (1 − Σα − Σβ) when the persistence is below one.
    pub fn unconditional_variance(&self) -> Option<f64> {
        let p = self.persistence();
        (p < 1.0).then(|| self.omega / (1.0 - p))
    }
}

/// θ = (θ_arma, θ_garch, φ). `garch` is `None` for M-GARMA models; φ is
/// carried by `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub arma: ArmaParams,
    pub garch: Option<GarchParams>,
    pub family: Family,
}

impl ParamVector {
    pub fn garma_garch(
        intercept: f64,
        ar: Vec<f64>,
        ma: Vec<f64>,
        omega: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        family: Family,
    ) -> Self {
        Self {
            arma: ArmaParams { intercept, ar, ma },
            garch: Some(GarchParams { omega, alpha, beta }),
            family,
        }
    }

    pub fn mgarma(intercept: f64, ar: Vec<f64>, ma: Vec<f64>, family: Family) -> Self {
        Self {
            arma: ArmaParams { intercept, ar, ma },
            garch: None,
            family,
        }
    }

    pub fn orders(&self) -> Orders {
        let (r, s) = self
            .garch
            .as_ref()
            .map_or((0, 0), |g| (g.alpha.len(), g.beta.len()));
        Orders::new(self.arma.ar.len(), self.arma.ma.len(), r, s)
    }

    /// Checks the parameter against `spec`: matching orders and family, and
    /// ω > 0, α, β ≥ 0, plus the family's own constraints.
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.orders() != spec.orders {
            return Err(Error::Params(format!(
                "parameter orders {:?} do not match the model orders {:?}",
                self.orders(),
                spec.orders
            )));
        }
        if self.family.kind() != spec.kind || self.family.is_fixed_baseline() != spec.is_mgarma() {
            return Err(Error::Params(format!(
                "family {:?} does not match the {} model",
                self.family, spec.kind
            )));
        }
        self.family.validate()?;
        let arma_finite = self.arma.intercept.is_finite()
            && self
                .arma
                .ar
                .iter()
                .chain(&self.arma.ma)
                .all(|v| v.is_finite());
        if !arma_finite {
            return Err(Error::Params("ARMA coefficients must be finite".into()));
        }
        if let Some(g) = &self.garch {
            if !(g.omega > 0.0) || !g.omega.is_finite() {
                return Err(Error::Params(format!(
                    "omega must be positive, got {}",
                    g.omega
                )));
            }
            if let Some(v) = g
                .alpha
                .iter()
                .chain(&g.beta)
                .find(|v| !(**v >= 0.0) || !v.is_finite())
            {
                return Err(Error::Params(format!(
                    "GARCH coefficients must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// θ as a flat vector in [`ModelSpec::param_names`] order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = vec![self.arma.intercept];
        v.extend(&self.arma.ar);
        v.extend(&self.arma.ma);
        if let Some(g) = &self.garch {
            v.push(g.omega);
            v.extend(&g.alpha);
            v.extend(&g.beta);
        }
        v.extend(self.family.invariant_params());
        v
    }

    /// Inverse of [`ParamVector::flatten`]. Constraints are not checked.
    pub fn from_flat(spec: &ModelSpec, values: &[f64]) -> Result<Self> {
        if values.len() != spec.n_params() {
            return Err(Error::Params(format!(
                "expected {} parameters ({}), got {}",
                spec.n_params(),
                spec.param_names().join(", "),
                values.len()
            )));
        }
        let o = spec.orders;
        let mut it = values.iter().copied();
        let mut take = |n: usize| -> Vec<f64> { it.by_ref().take(n).collect() };
        let intercept = take(1)[0];
        let ar = take(o.p);
        let ma = take(o.q);
        let garch = if spec.is_mgarma() {
            None
        } else {
            let omega = take(1)[0];
            Some(GarchParams {
                omega,
                alpha: take(o.r),
                beta: take(o.s),
            })
        };
        let inv = take(spec.n_invariant());
        let family = spec
            .default_family()
            .with_invariant_params(&inv)
            .or_else(|_| {
                // keep out-of-range values so callers can report them
                match spec.default_family() {
                    Family::Ghsst { .. } => Ok(Family::Ghsst {
                        dof: inv[0],
                        skew: inv[1],
                    }),
                    Family::LogGammaFixedShape { .. } => {
                        Ok(Family::LogGammaFixedShape { shape: inv[0] })
                    }
                    Family::LogitBetaFixedPrecision { .. } => {
                        Ok(Family::LogitBetaFixedPrecision { precision: inv[0] })
                    }
                    f => Err(Error::Params(format!(
                        "invalid invariant parameters for {f:?}"
                    ))),
                }
            })?;
        Ok(Self {
            arma: ArmaParams { intercept, ar, ma },
            garch,
            family,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_rejects_degenerate_orders() {
        assert!(ModelSpec::new(FamilyKind::LogGamma, Orders::new(0, 0, 0, 0)).is_err());
        assert!(ModelSpec::new(FamilyKind::LogGamma, Orders::new(1, 0, 0, 1)).is_err());
        assert!(ModelSpec::new(FamilyKind::Ghsst, Orders::new(1, 1, 0, 0)).is_err());
        assert!(
            ModelSpec::new(FamilyKind::LogitBeta, Orders::new(1, 1, 0, 0))
                .unwrap()
                .is_mgarma()
        );
    }

    #[test]
    fn flatten_round_trip_and_names() {
        let spec = ModelSpec::new(FamilyKind::Ghsst, Orders::new(2, 1, 1, 1)).unwrap();
        let theta = ParamVector::garma_garch(
            0.1,
            vec![0.5, 0.2],
            vec![-0.3],
            0.02,
            vec![0.05],
            vec![0.9],
            Family::Ghsst {
                dof: 7.0,
                skew: -0.2,
            },
        );
        theta.validate(&spec).unwrap();
        let flat = theta.flatten();
        assert_eq!(flat.len(), spec.n_params());
        assert_eq!(
            spec.param_names(),
            ["phi0", "phi1", "phi2", "delta1", "omega", "alpha1", "beta1", "nu", "tau"]
        );
        assert_eq!(ParamVector::from_flat(&spec, &flat).unwrap(), theta);
    }

    #[test]
    fn validate_enforces_constraints() {
        let spec = ModelSpec::new(FamilyKind::LogGamma, Orders::new(1, 1, 1, 1)).unwrap();
        let mut theta = ParamVector::garma_garch(
            0.0,
            vec![0.95],
            vec![-0.65],
            0.02,
            vec![0.06],
            vec![0.9],
            Family::LogGamma,
        );
        theta.validate(&spec).unwrap();
        theta.garch.as_mut().unwrap().omega = 0.0;
        assert!(theta.validate(&spec).is_err());
        theta.garch.as_mut().unwrap().omega = 0.02;
        theta.garch.as_mut().unwrap().beta[0] = -0.1;
        assert!(theta.validate(&spec).is_err());
        let mgarma = ModelSpec::new(FamilyKind::LogGamma, Orders::new(1, 1, 0, 0)).unwrap();
        assert!(theta.validate(&mgarma).is_err());
        assert_eq!(mgarma.param_names(), ["phi0", "phi1", "delta1", "c"]);
    }
}
