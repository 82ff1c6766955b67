use thiserror::Error;

use crate::objectives::Objective;

#[derive(Debug, Error)]
pub enum IppError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("objective {0} is not supported by this operation")]
    WrongObjective(Objective),

    #[error("budget {budget} is below the shortest start-to-goal cost {shortest}")]
    InfeasibleBudget { budget: f64, shortest: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, IppError>;
