//! Command-line front end for `garmagarch`: CSV ingestion, run
//! configuration and the `fit`, `simulate`, `study`, `diagnose` and `check`
//! commands. Every command writes its artifacts atomically into the output
//! directory; the same configuration and seed give byte-identical files.

pub mod error;
pub mod ingest;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use garmagarch::diagnostics::DiagnosticsReport;
use garmagarch::simulate::replication_rng;
use garmagarch::{
    check_stationarity, diagnose, diagnose_at, fit, run_study, simulate_path, Construction,
    Estimator, FamilyKind, FilterOutput, FitOptions, FitReport, InitPolicy, ModelSpec, Orders,
    ParamVector, Preset, Series, SimConfig,
};
use serde::Serialize;

pub use error::{CliError, CliResult};
pub use ingest::{ingest_csv, Column};

#[derive(Debug, Parser)]
#[command(
    name = "garmagarch",
    version,
    about = "GARMA-GARCH models for non-Gaussian time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fit a model to one column of a CSV file and write the report and plot data.
    Fit(Options),
    /// Simulate one path from a preset or a parameter file.
    Simulate(Options),
    /// Run a Monte Carlo study of the GMLE and MLE estimators.
    Study(Options),
    /// Diagnostics of a CSV series at given parameters.
    Diagnose(Options),
    /// Check the sufficient stationarity condition at given parameters.
    Check(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Fit,
    Simulate,
    Study,
    Diagnose,
    Check,
}

fn parse_scale(s: &str) -> Result<f64, String> {
    // accepts plain numbers and fractions such as 20/3
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| format!("invalid scale '{s}'"))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| format!("invalid scale '{s}'"))?;
            a / b
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("invalid scale '{s}'"))?,
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!("scale must be positive and finite, got {s}"))
    }
}

/// Flags shared by every command; each command reads the ones it needs.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Options {
    /// Distribution family: log-gamma, logit-beta or ghsst.
    #[arg(long)]
    pub family: Option<FamilyKind>,
    /// AR order.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// MA order.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// ARCH order (r = s = 0 gives the M-GARMA model).
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// GARCH order.
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// mle, gmle or gmle+pseudo.
    #[arg(long, default_value = "mle")]
    pub estimator: Estimator,
    /// Input CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column of the input CSV, by zero-based index or header name.
    #[arg(long, default_value = "0")]
    #[serde(serialize_with = "serialize_display")]
    pub column: Column,
    /// Multiplicative factor applied to the input, e.g. 20/3.
    #[arg(long, default_value = "1", value_parser = parse_scale)]
    pub scale: f64,
    /// Directory receiving the outputs.
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Series length for simulate and study.
    #[arg(long = "T", default_value_t = 2000)]
    pub t_len: usize,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// Portmanteau lags, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,5,22")]
    pub lags: Vec<usize>,
    /// Built-in parameter vector: table1 or table2.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// JSON file with a parameter vector, or a report written by `fit`.
    #[arg(long)]
    pub theta: Option<PathBuf>,
    /// Largest h scanned by the stationarity check.
    #[arg(long, default_value_t = 64)]
    pub h_max: usize,
}

fn serialize_display<S: serde::Serializer>(c: &Column, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(c)
}

/// A parsed command with its options.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(flatten)]
    pub options: Options,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let (command, options) = match cli.command {
            Command::Fit(o) => (CommandKind::Fit, o),
            Command::Simulate(o) => (CommandKind::Simulate, o),
            Command::Study(o) => (CommandKind::Study, o),
            Command::Diagnose(o) => (CommandKind::Diagnose, o),
            Command::Check(o) => (CommandKind::Check, o),
        };
        RunConfig { command, options }
    }
}

fn read_theta(path: &Path) -> CliResult<ParamVector> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    // a fit report carries the estimate under fit.theta
    let theta = value.pointer("/fit/theta").cloned().unwrap_or(value);
    serde_json::from_value(theta)
        .map_err(|e| CliError::Config(format!("{}: not a parameter vector: {e}", path.display())))
}

fn theta_and_spec(o: &Options) -> CliResult<(ParamVector, ModelSpec)> {
    let theta = match (&o.preset, &o.theta) {
        (Some(p), None) => p.theta(),
        (None, Some(path)) => read_theta(path)?,
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either --preset or --theta, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "this command needs --preset or --theta".into(),
            ))
        }
    };
    let spec = ModelSpec::new(theta.family.kind(), theta.orders())?;
    theta.validate(&spec)?;
    Ok((theta, spec))
}

fn read_series(o: &Options, kind: FamilyKind) -> CliResult<Series> {
    let input = o
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("--input is required".into()))?;
    let y = ingest_csv(input, &o.column, o.scale)?;
    Ok(Series::new(kind, y)?)
}

fn check_lags(lags: &[usize]) -> CliResult<()> {
    if lags.is_empty() || lags.contains(&0) {
        return Err(CliError::Config("--lags needs positive lags".into()));
    }
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// fitted.csv, residuals.csv, gamma.csv and pp.csv for the four plot panels.
fn write_plot_data(
    dir: &Path,
    theta: &ParamVector,
    series: &Series,
    out: &FilterOutput,
    d: &DiagnosticsReport,
) -> CliResult<Vec<PathBuf>> {
    let family = theta.family;
    let y_hat = out
        .gamma
        .iter()
        .map(|g| family.conditional_mean_of_y(g))
        .collect::<garmagarch::Result<Vec<_>>>()?;
    let t = |i: usize| (i + 1).to_string();
    let fitted = series
        .y()
        .iter()
        .zip(&y_hat)
        .enumerate()
        .map(|(i, (y, f))| vec![t(i), fmt(*y), fmt(*f)]);
    let resid = out
        .eps
        .iter()
        .zip(&out.sigma2)
        .enumerate()
        .map(|(i, (e, s2))| vec![t(i), fmt(*e), fmt(s2.sqrt())]);
    let gamma = out.gamma.iter().enumerate().map(|(i, g)| {
        let (a, b) = g.components();
        vec![t(i), fmt(a), fmt(b)]
    });
    let pp: Vec<Vec<String>> = d.pp_points.value().map_or_else(Vec::new, |pts| {
        pts.iter().map(|(u, v)| vec![fmt(*u), fmt(*v)]).collect()
    });
    Ok(vec![
        output::write_csv(dir, "fitted.csv", &["t", "y", "y_hat"], fitted)?,
        output::write_csv(dir, "residuals.csv", &["t", "resid", "sigma"], resid)?,
        output::write_csv(dir, "gamma.csv", &["t", "gamma1", "gamma2"], gamma)?,
        output::write_csv(dir, "pp.csv", &["u", "nu"], pp)?,
    ])
}

#[derive(Serialize)]
struct FitFile<'a> {
    config: &'a RunConfig,
    fit: &'a FitReport,
    diagnostics: &'a DiagnosticsReport,
}

fn run_fit(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let o = &cfg.options;
    let kind = o
        .family
        .ok_or_else(|| CliError::Config("fit needs --family".into()))?;
    check_lags(&o.lags)?;
    let spec = ModelSpec::new(kind, Orders::new(o.p, o.q, o.r, o.s))?;
    let series = read_series(o, kind)?;
    let report = fit(&spec, &series, &FitOptions::with_estimator(o.estimator))?;
    let (diagnostics, out) = diagnose(&report, &series, &InitPolicy::SampleMean, &o.lags)?;
    let mut files = vec![output::write_json(
        &o.output_dir,
        "report.json",
        &FitFile {
            config: cfg,
            fit: &report,
            diagnostics: &diagnostics,
        },
    )?];
    files.extend(write_plot_data(
        &o.output_dir,
        &report.theta,
        &series,
        &out,
        &diagnostics,
    )?);
    Ok(files)
}

#[derive(Serialize)]
struct DiagnoseFile<'a> {
    config: &'a RunConfig,
    theta: &'a ParamVector,
    diagnostics: &'a DiagnosticsReport,
}

fn run_diagnose(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let o = &cfg.options;
    check_lags(&o.lags)?;
    let (theta, _) = theta_and_spec(o)?;
    let series = read_series(o, theta.family.kind())?;
    let (diagnostics, out) = diagnose_at(&theta, &series, &InitPolicy::SampleMean, &o.lags)?;
    let mut files = vec![output::write_json(
        &o.output_dir,
        "diagnostics.json",
        &DiagnoseFile {
            config: cfg,
            theta: &theta,
            diagnostics: &diagnostics,
        },
    )?];
    files.extend(write_plot_data(
        &o.output_dir,
        &theta,
        &series,
        &out,
        &diagnostics,
    )?);
    Ok(files)
}

#[derive(Serialize)]
struct SimulationFile<'a> {
    config: &'a RunConfig,
    theta: &'a ParamVector,
    /// State before the first kept observation; filtering with it reproduces the path.
    presample: &'a garmagarch::Presample,
}

fn run_simulate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let o = &cfg.options;
    let (theta, _) = theta_and_spec(o)?;
    let path = simulate_path(
        &theta,
        o.t_len,
        o.burn_in,
        Construction::Direct,
        &mut replication_rng(o.seed, 0),
    )?;
    let rows = (0..o.t_len).map(|i| {
        vec![
            (i + 1).to_string(),
            fmt(path.y[i]),
            fmt(path.mu[i]),
            fmt(path.sigma2[i]),
        ]
    });
    Ok(vec![
        output::write_csv(
            &o.output_dir,
            "series.csv",
            &["t", "y", "mu", "sigma2"],
            rows,
        )?,
        output::write_json(
            &o.output_dir,
            "simulation.json",
            &SimulationFile {
                config: cfg,
                theta: &theta,
                presample: &path.presample,
            },
        )?,
    ])
}

#[derive(Serialize)]
struct StudyFile<'a> {
    config: &'a RunConfig,
    summary: &'a garmagarch::MonteCarloSummary,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt)
}

fn run_study_command(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let o = &cfg.options;
    let (theta, _) = theta_and_spec(o)?;
    let config = SimConfig {
        burn_in: o.burn_in,
        ..SimConfig::full(theta, o.t_len, o.reps, o.seed)
    };
    let summary = run_study(&config)?;
    let mut rows = Vec::new();
    for cell in &summary.cells {
        for p in &cell.params {
            rows.push(vec![
                cell.model.name().to_string(),
                cell.estimator.name().to_string(),
                p.name.clone(),
                opt(p.truth),
                fmt(p.mean),
                fmt(p.sd),
                opt(p.rmse),
                opt(p.mean_se),
                cell.n_used.to_string(),
                cell.n_failed.to_string(),
            ]);
        }
    }
    let header = [
        "model",
        "estimator",
        "param",
        "truth",
        "mean",
        "sd",
        "rmse",
        "mean_se",
        "n_used",
        "n_failed",
    ];
    Ok(vec![
        output::write_json(
            &o.output_dir,
            "study.json",
            &StudyFile {
                config: cfg,
                summary: &summary,
            },
        )?,
        output::write_csv(&o.output_dir, "study.csv", &header, rows)?,
    ])
}

#[derive(Serialize)]
struct CheckFile<'a> {
    config: &'a RunConfig,
    theta: &'a ParamVector,
    verdict: &'a garmagarch::StationarityVerdict,
}

fn run_check(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let o = &cfg.options;
    let (theta, spec) = theta_and_spec(o)?;
    let verdict = check_stationarity(&spec, &theta, o.h_max)?;
    Ok(vec![output::write_json(
        &o.output_dir,
        "stationarity.json",
        &CheckFile {
            config: cfg,
            theta: &theta,
            verdict: &verdict,
        },
    )?])
}

/// Runs one command and returns the files it wrote.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    match cfg.command {
        CommandKind::Fit => run_fit(cfg),
        CommandKind::Simulate => run_simulate(cfg),
        CommandKind::Study => run_study_command(cfg),
        CommandKind::Diagnose => run_diagnose(cfg),
        CommandKind::Check => run_check(cfg),
    }
}
