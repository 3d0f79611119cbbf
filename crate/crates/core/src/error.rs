//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::linkmap::FamilyKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument outside the mathematical domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// Result not representable as a finite `f64`; the log-scaled variant should be used.
    #[error("overflow in {function}: {detail}")]
    Overflow {
        function: &'static str,
        detail: String,
    },

    /// Observation outside the support of a family.
    #[error("observation {value} outside the support of the {family} family ({support})")]
    Support {
        family: FamilyKind,
        value: f64,
        support: &'static str,
    },

    /// The moment-to-parameter inversion did not converge.
    #[error("could not solve {family} parameters for mean {mean} and variance {variance}")]
    Solve {
        family: FamilyKind,
        mean: f64,
        variance: f64,
    },

    /// A failure inside the filter, tagged with the (1-based) time index.
    #[error("filter failed at t = {t}: {source}")]
    Filter {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid model specification: {0}")]
    Spec(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("Monte Carlo study failed: {0}")]
    Study(String),

    /// A diagnostic that cannot be computed for the supplied input.
    #[error("diagnostic unavailable: {0}")]
    Unavailable(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn at_time(self, t: usize) -> Self {
        match self {
            e @ Error::Filter { .. } => e,
            e => Error::Filter {
                t,
                source: Box::new(e),
            },
        }
    }
}
