// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod estimate;
pub mod linkmap;
pub mod model;
pub mod optim;
pub mod quad;
pub mod simulate;
pub mod specfun;
pub mod stationarity;

pub use diagnostics::{diagnose, diagnose_at, DiagnosticsReport};
pub use engine::{filter, loglik, FilterOutput, InitPolicy, Presample, Series};
pub use error::{Error, Result};
pub use estimate::{
    fit, fit_gmle, fit_mle, fit_pseudo_ml_phi, information_se, se_from_hessian, Estimator,
    FitOptions, FitReport,
};
pub use linkmap::{Family, FamilyKind, MomentPair, TimeVarying};
pub use model::{ArmaParams, GarchParams, ModelSpec, Orders, ParamVector};
pub use simulate::{
    run_study, simulate_path, Construction, MonteCarloSummary, Preset, SimConfig, SimulatedPath,
    StudyModel,
};
pub use stationarity::{check_stationarity, StationarityVerdict};
