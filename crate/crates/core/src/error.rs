use thiserror::Error;

use crate::model::ApplicabilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid test function: {0}")]
    InvalidFunction(String),

    #[error("unknown test function `{name}` (known: {known})")]
    UnknownFunction { name: String, known: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {what} at t={time}, state={state:?}")]
    NonFinite {
        what: String,
        time: f64,
        state: Vec<f64>,
    },

    #[error("non-finite test function value at step {step}")]
    NonFiniteFunctional { step: usize },

    #[error("missing derivative: {0}")]
    MissingDerivative(String),

    #[error("covariance not PSD (min eigenvalue {min_eigenvalue:e}, trace {trace:e}); increase quadrature nodes")]
    NotPsd { min_eigenvalue: f64, trace: f64 },

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("{theorem} does not apply:\n{report}")]
    Inapplicable {
        theorem: &'static str,
        report: Box<ApplicabilityReport>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{degenerate} of {total} replications have zero conditional variance; experiment misconfigured")]
    TooManyDegenerate { degenerate: usize, total: usize },

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
