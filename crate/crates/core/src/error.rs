use std::fmt;

use thiserror::Error;

/// One failed hypothesis check on the continuous problem data.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HypothesisViolation {
    /// Short name of the hypothesis, e.g. `"a >= 1"`.
    pub name: String,
    /// Where the check failed (a sample point, a parameter name, ...).
    pub location: String,
    /// The offending value.
    pub value: f64,
}

impl fmt::Display for HypothesisViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hypothesis `{}` violated at {} (value {})",
            self.name, self.location, self.value
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{} hypothesis violation(s): {}", .0.len(), format_violations(.0))]
    Hypotheses(Vec<HypothesisViolation>),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("unknown builtin problem `{0}`")]
    UnknownProblem(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("field does not belong to this mesh")]
    MeshMismatch,

    #[error("invalid exponent p = {0}; need p > 2")]
    InvalidExponent(f64),

    #[error("gamma = {gamma} is not positive; choose a smaller eta than {eta}")]
    ChooseSmallerEta { eta: f64, gamma: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("embedding-constant ensemble is empty or all zero")]
    EmptyEnsemble,

    #[error("attractor sample is empty")]
    EmptySample,

    #[error("time window [{start}, {end}] is not covered by the trajectory")]
    WindowOutOfRange { start: f64, end: f64 },

    #[error("nonlinear solve failed at t = {time} after {iterations} iterations (residual {residual:e})")]
    NonlinearSolveFailure {
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("trajectory never entered the absorbing ball (last value {last:e}, bound {bound:e})")]
    NoAbsorption { last: f64, bound: f64 },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[HypothesisViolation]) -> String {
    v.iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
