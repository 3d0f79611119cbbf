//! Path simulation and the Monte Carlo harness.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). Replication `i` of a
//! study seeded with `seed` uses `ChaCha8Rng::seed_from_u64(seed)` switched
//! to stream `i`, so results do not depend on the order in which
//! replications run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{InitPolicy, Presample, Series};
use crate::error::{Error, Result};
use crate::estimate::{fit, Estimator, FitOptions};
use crate::linkmap::{Family, FamilyKind, MomentPair, TimeVarying};
use crate::model::{ModelSpec, Orders, ParamVector};
use crate::specfun::digamma;

/// Variance level treated as explosive.
const EXPLOSIVE_VARIANCE: f64 = 1e12;

/// How observations are drawn given γ_t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Construction {
    /// y_t ~ f(· | γ_t, φ) from the family sampler.
    #[default]
    Direct,
    /// log-Gamma only: ε_t = ln G − ψ(c_t) with G ~ Gamma(c_t, 1), and
    /// h(y_t) = μ_t + ε_t. Equal in law to `Direct`.
    LogGammaInnovation,
}

/// A simulated series with the generator's internal sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    pub y: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub eps: Vec<f64>,
    pub gamma: Vec<TimeVarying>,
    /// State just before the first retained observation; passing it as
    /// [`InitPolicy::Given`] makes the filter reproduce `mu`, `sigma2` and
    /// `eps`.
    pub presample: Presample,
}

impl SimulatedPath {
    pub fn series(&self, kind: FamilyKind) -> Result<Series> {
        Series::new(kind, self.y.clone())
    }

    pub fn init_policy(&self) -> InitPolicy {
        InitPolicy::Given(self.presample.clone())
    }
}

/// The generator for replication `stream` of a study seeded with `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates `t_len` observations after discarding `burn_in`.
///
/// The recursion starts from the unconditional values: pre-sample h equal
/// to φ₀/(1 − Σφ) (φ₀ when Σφ = 1), ε = 0, and ε² = σ² = ω/(1 − Σα − Σβ)
/// (ω when the persistence is one or more).
pub fn simulate_path<R: Rng + ?Sized>(
    theta: &ParamVector,
    t_len: usize,
    burn_in: usize,
    construction: Construction,
    rng: &mut R,
) -> Result<SimulatedPath> {
    let spec = ModelSpec::new(theta.family.kind(), theta.orders())?;
    theta.validate(&spec)?;
    if construction == Construction::LogGammaInnovation
        && theta.family.kind() != FamilyKind::LogGamma
    {
        return Err(Error::Simulation(
            "the innovation construction is only defined for the log-gamma family".into(),
        ));
    }
    let m = spec.orders.max_lag();
    let total = m + burn_in + t_len;
    let ar_sum: f64 = theta.arma.ar.iter().sum();
    let h0 = if (1.0 - ar_sum).abs() > 1e-12 {
        theta.arma.intercept / (1.0 - ar_sum)
    } else {
        theta.arma.intercept
    };
    let s0 = theta
        .garch
        .as_ref()
        .map_or(f64::NAN, |g| g.unconditional_variance().unwrap_or(g.omega));

    let mut h = vec![h0; total];
    let mut eps = vec![0.0; total];
    let mut epssq = vec![s0; total];
    let mut sig = vec![s0; total];
    let mut y = Vec::with_capacity(t_len);
    let mut mus = Vec::with_capacity(t_len);
    let mut sigs = Vec::with_capacity(t_len);
    let mut epss = Vec::with_capacity(t_len);
    let mut gammas = Vec::with_capacity(t_len);
    let family = theta.family;
    let kind = family.kind();

    for i in m..total {
        let mut mu = theta.arma.intercept;
        for (j, phi) in theta.arma.ar.iter().enumerate() {
            mu += phi * h[i - 1 - j];
        }
        for (j, d) in theta.arma.ma.iter().enumerate() {
            mu += d * eps[i - 1 - j];
        }
        let sigma2 = match &theta.garch {
            Some(g) => {
                let mut v = g.omega;
                for (j, a) in g.alpha.iter().enumerate() {
                    v += a * epssq[i - 1 - j];
                }
                for (j, b) in g.beta.iter().enumerate() {
                    v += b * sig[i - 1 - j];
                }
                v
            }
            None => f64::NAN,
        };
        if sigma2 > EXPLOSIVE_VARIANCE || !mu.is_finite() {
            return Err(Error::Simulation(format!(
                "path exploded at step {} (mean {mu}, variance {sigma2}); the parameters are probably not stationary",
                i - m + 1
            )));
        }
        let gamma = family
            .solve_gamma(MomentPair::new(mu, sigma2))
            .map_err(|e| Error::Simulation(format!("step {}: {e}", i - m + 1)))?;
        let (hi, yi) = match construction {
            Construction::Direct => {
                let yi = family.sample(&gamma, rng)?;
                (
                    kind.y_link(yi)
                        .map_err(|e| Error::Simulation(e.to_string()))?,
                    yi,
                )
            }
            Construction::LogGammaInnovation => {
                let (shape, _) = gamma.components();
                let g = Family::LogGamma.sample(&TimeVarying::Gamma { shape, mean: shape }, rng)?;
                let hi = mu + g.ln() - digamma(shape);
                (hi, hi.exp())
            }
        };
        h[i] = hi;
        eps[i] = hi - mu;
        epssq[i] = eps[i] * eps[i];
        sig[i] = sigma2;
        let kept = i - m;
        if kept >= burn_in {
            y.push(yi);
            mus.push(mu);
            epss.push(eps[i]);
            gammas.push(gamma);
            sigs.push(if theta.garch.is_some() {
                sigma2
            } else {
                family.mean_var_links(&gamma)?.variance
            });
        }
    }
    let cut = m + burn_in;
    Ok(SimulatedPath {
        y,
        mu: mus,
        sigma2: sigs,
        eps: epss,
        gamma: gammas,
        presample: Presample {
            h: h[cut - m..cut].to_vec(),
            eps: eps[cut - m..cut].to_vec(),
            sigma2: sig[cut - m..cut].to_vec(),
        },
    })
}

/// Parameter presets of the two simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// log-Gamma GARMA(1,1)-GARCH(1,1).
    Table1,
    /// logit-Beta GARMA(1,1)-GARCH(1,1).
    Table2,
}

impl Preset {
    pub fn theta(self) -> ParamVector {
        match self {
            Preset::Table1 => ParamVector::garma_garch(
                0.0,
                vec![0.95],
                vec![-0.65],
                0.02,
                vec![0.06],
                vec![0.90],
                Family::LogGamma,
            ),
            Preset::Table2 => ParamVector::garma_garch(
                -0.10,
                vec![0.90],
                vec![-0.50],
                0.01,
                vec![0.45],
                vec![0.45],
                Family::LogitBeta,
            ),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            other => Err(Error::Spec(format!("unknown preset '{other}'"))),
        }
    }
}

/// Fitted model in a study: the data-generating dynamics or the M-GARMA
/// baseline with the same ARMA orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StudyModel {
    GarmaGarch,
    MGarma,
}

impl StudyModel {
    pub fn name(self) -> &'static str {
        match self {
            StudyModel::GarmaGarch => "garma-garch",
            StudyModel::MGarma => "m-garma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub theta: ParamVector,
    pub t_len: usize,
    pub burn_in: usize,
    pub n_reps: usize,
    pub seed: u64,
    /// (model, estimator) pairs fitted to every replication.
    pub fits: Vec<(StudyModel, Estimator)>,
    pub compute_se: bool,
}

impl SimConfig {
    /// GMLE and MLE under both the true dynamics and the M-GARMA baseline
    /// (the baseline is skipped for GHSST, which has none). The GMLE column
    /// of models with invariant parameters uses pseudo-ML for them.
    pub fn full(theta: ParamVector, t_len: usize, n_reps: usize, seed: u64) -> Self {
        let kind = theta.family.kind();
        let mut fits = Vec::new();
        let models: &[StudyModel] = if kind == FamilyKind::Ghsst {
            &[StudyModel::GarmaGarch]
        } else {
            &[StudyModel::MGarma, StudyModel::GarmaGarch]
        };
        for &model in models {
            let has_phi = kind == FamilyKind::Ghsst || model == StudyModel::MGarma;
            fits.push((
                model,
                if has_phi {
                    Estimator::GmlePseudo
                } else {
                    Estimator::Gmle
                },
            ));
            fits.push((model, Estimator::Mle));
        }
        Self {
            theta,
            t_len,
            burn_in: 500,
            n_reps,
            seed,
            fits,
            compute_se: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let spec = ModelSpec::new(self.theta.family.kind(), self.theta.orders())?;
        self.theta.validate(&spec)?;
        if self.burn_in < 200 {
            return Err(Error::Study(format!(
                "burn-in must be at least 200, got {}",
                self.burn_in
            )));
        }
        if self.n_reps == 0 || self.t_len == 0 {
            return Err(Error::Study("n_reps and T must be positive".into()));
        }
        if self.fits.is_empty() {
            return Err(Error::Study("no fits requested".into()));
        }
        Ok(())
    }
}

fn spec_for(theta: &ParamVector, model: StudyModel) -> Result<ModelSpec> {
    let o = theta.orders();
    match model {
        StudyModel::GarmaGarch => ModelSpec::new(theta.family.kind(), o),
        StudyModel::MGarma => ModelSpec::new(theta.family.kind(), Orders::new(o.p, o.q, 0, 0)),
    }
}

/// Summary of one parameter in one study cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: Option<f64>,
    pub mean: f64,
    /// Monte Carlo standard deviation of the estimates.
    pub sd: f64,
    /// Root mean squared error against `truth`, when the truth is defined.
    pub rmse: Option<f64>,
    /// Mean of the reported standard errors over replications that have them.
    pub mean_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub model: StudyModel,
    pub estimator: Estimator,
    pub n_used: usize,
    pub n_failed: usize,
    pub params: Vec<ParamSummary>,
    /// Per-replication estimates (`None` for failed fits), by replication index.
    pub estimates: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub family: FamilyKind,
    pub orders: Orders,
    pub truth: Vec<(String, f64)>,
    pub t_len: usize,
    pub burn_in: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub cells: Vec<StudyCell>,
}

impl MonteCarloSummary {
    pub fn cell(&self, model: StudyModel, estimator: Estimator) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.estimator == estimator)
    }
}

impl StudyCell {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

struct RepFit {
    names: Vec<String>,
    estimates: Vec<f64>,
    se: Option<Vec<f64>>,
}

/// Runs the study: simulate, fit every requested (model, estimator), and
/// aggregate. Fits that fail or do not converge are excluded and counted;
/// more than 20% of them in any cell is an error.
pub fn run_study(config: &SimConfig) -> Result<MonteCarloSummary> {
    config.validate()?;
    let kind = config.theta.family.kind();
    let rep_results: Vec<Result<Vec<Option<RepFit>>>> = (0..config.n_reps)
        .into_par_iter()
        .map(|i| run_replication(config, i as u64))
        .collect();
    let mut per_rep = Vec::with_capacity(config.n_reps);
    for r in rep_results {
        per_rep.push(r?);
    }
    let true_spec = ModelSpec::new(kind, config.theta.orders())?;
    let truth: Vec<(String, f64)> = true_spec
        .param_names()
        .into_iter()
        .zip(config.theta.flatten())
        .collect();
    let mut cells = Vec::new();
    for (c, &(model, estimator)) in config.fits.iter().enumerate() {
        let column: Vec<Option<&RepFit>> = per_rep.iter().map(|r| r[c].as_ref()).collect();
        let n_used = column.iter().filter(|f| f.is_some()).count();
        let n_failed = config.n_reps - n_used;
        if n_failed * 5 > config.n_reps {
            return Err(Error::Study(format!(
                "{} of {} {} {} fits failed or did not converge",
                n_failed,
                config.n_reps,
                model.name(),
                estimator
            )));
        }
        let names = column
            .iter()
            .flatten()
            .next()
            .map(|f| f.names.clone())
            .unwrap_or_default();
        let params = names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let vals: Vec<f64> = column.iter().flatten().map(|f| f.estimates[k]).collect();
                let ses: Vec<f64> = column
                    .iter()
                    .flatten()
                    .filter_map(|f| f.se.as_ref().map(|s| s[k]))
                    .collect();
                summarize(
                    name,
                    &vals,
                    &ses,
                    truth.iter().find(|(n, _)| n == name).map(|t| t.1),
                )
            })
            .collect();
        cells.push(StudyCell {
            model,
            estimator,
            n_used,
            n_failed,
            params,
            estimates: column
                .iter()
                .map(|f| f.map(|f| f.estimates.clone()))
                .collect(),
        });
    }
    Ok(MonteCarloSummary {
        family: kind,
        orders: config.theta.orders(),
        truth,
        t_len: config.t_len,
        burn_in: config.burn_in,
        n_reps: config.n_reps,
        seed: config.seed,
        cells,
    })
}

fn summarize(name: &str, vals: &[f64], ses: &[f64], truth: Option<f64>) -> ParamSummary {
    let n = vals.len().max(1) as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let rmse = truth.map(|t| (vals.iter().map(|v| (v - t).powi(2)).sum::<f64>() / n).sqrt());
    let mean_se = (!ses.is_empty()).then(|| ses.iter().sum::<f64>() / ses.len() as f64);
    ParamSummary {
        name: name.to_string(),
        truth,
        mean,
        sd,
        rmse,
        mean_se,
    }
}

fn run_replication(config: &SimConfig, index: u64) -> Result<Vec<Option<RepFit>>> {
    let mut rng = replication_rng(config.seed, index);
    let path = simulate_path(
        &config.theta,
        config.t_len,
        config.burn_in,
        Construction::Direct,
        &mut rng,
    )?;
    let kind = config.theta.family.kind();
    let series = path.series(kind)?;
    let mut out = Vec::with_capacity(config.fits.len());
    for &(model, estimator) in &config.fits {
        let spec = spec_for(&config.theta, model)?;
        let opts = FitOptions {
            compute_se: config.compute_se,
            ..FitOptions::with_estimator(estimator)
        };
        let rep = fit(&spec, &series, &opts)
            .ok()
            .filter(|r| r.converged)
            .map(|r| RepFit {
                names: r.names,
                estimates: r.estimates,
                se: r.se.values,
            });
        out.push(rep);
    }
    Ok(out)
}
