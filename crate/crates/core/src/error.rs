use thiserror::Error;

use crate::lattice::Site;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed counter: {0}")]
    MalformedCounter(String),

    #[error("degenerate state: every amplitude is zero")]
    DegenerateState,

    #[error("step horizon of {steps} exhausted before {goal}")]
    Horizon { steps: usize, goal: &'static str },

    #[error("corrupted operator at site {site}: {detail}")]
    CorruptedOperator { site: Site, detail: String },

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("energy {energy} lies outside the open lead band (0, {band_top})")]
    OutOfBand { energy: f64, band_top: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("initial state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
