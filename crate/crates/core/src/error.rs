use thiserror::Error;

use crate::maps::IteratedLog;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("non-finite value while evaluating {map} at ({x}, {y})")]
    NonFinite { map: String, x: f64, y: f64 },

    #[error("coordinate {coord} = {value} lies on the 1/{denom} grid")]
    GridCollision { coord: usize, value: f64, denom: u64 },

    #[error("point avoids the rational grid only within {distance:e} (tolerance {tol:e}): {what}")]
    GammaResonance { what: String, distance: f64, tol: f64 },

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("conjugacy construction failed: {failing:?}")]
    ConjugacyFailed { failing: Vec<String> },

    #[error("paper-safe schedule infeasible at stage {stage}: {required}")]
    Infeasible { stage: u32, required: IteratedLog },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_stage(self, stage: u32) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }

    /// Innermost error with stage context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
