use thiserror::Error;

use crate::exprkit::{EvalError, ParseError, SampleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(
        "field `{field}` depends on fiber coordinate {coord}; base fields may only use x1, x2"
    )]
    NotBaseField { field: String, coord: &'static str },
    #[error("singular point: {0} vanishes")]
    Singular(String),
    #[error("chart is not in normal form: {0}")]
    NormalForm(String),
    #[error("chart is not canonical: {0}")]
    NotCanonical(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("derivative budget exceeded: {0}")]
    OrderBudget(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, state: [f64; 8] },
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
