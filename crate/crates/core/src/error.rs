use thiserror::Error;

use crate::types::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape: {0}")]
    Shape(String),

    #[error("non-finite data: {0}")]
    NonFinite(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(ValidationReport),

    #[error("invalid step configuration: {0}")]
    InvalidSteps(String),

    #[error("divergence: non-finite iterate at k = {k}")]
    Divergence { k: usize },

    #[error("psi range: entry {index} = {value} lies outside [0, 1]")]
    PsiRange { index: usize, value: f64 },

    #[error("metric indefinite (min eigenvalue {min_eigenvalue:e})")]
    MetricIndefinite { min_eigenvalue: f64 },

    #[error("rate undefined: square-root argument {argument} outside (0, 1]")]
    RateUndefined { argument: f64 },

    #[error("design rejected: {0}")]
    DesignRejected(String),

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate KKT system: {0}")]
    Degenerate(String),

    #[error("enumeration too large: p = {p} exceeds {limit}")]
    EnumerationTooLarge { p: usize, limit: usize },

    #[error("infeasible or degenerate: no active set satisfies the KKT conditions")]
    InfeasibleOrDegenerate,

    #[error("trace too short: {rows} usable rows, need at least {needed}")]
    TraceTooShort { rows: usize, needed: usize },

    #[error("problem file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
