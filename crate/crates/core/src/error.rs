use thiserror::Error;

use crate::vec2::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("integration failed at step {step}: non-finite state")]
    IntegrationFailure { step: usize },

    #[error("overcrowded arena: placed {placed} of {requested} agents in {attempts} attempts")]
    OvercrowdedArena {
        placed: usize,
        requested: usize,
        attempts: u64,
    },

    #[error("agents {i} and {j} occupy the same position")]
    DegeneratePair { i: usize, j: usize },

    #[error(
        "qp did not converge after {iterations} sweeps \
         (violation {max_violation:e}, stationarity {stationarity:e})"
    )]
    QpFailure {
        iterations: usize,
        max_violation: f64,
        stationarity: f64,
        best: Vec<Vec2>,
    },

    #[error("run with seed {seed} failed: {source}")]
    Run {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }
}
