use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("input sequence has zero energy")]
    ZeroEnergy,

    #[error("input is empty")]
    Empty,

    #[error("tap delay {delay} s is not a multiple of the sample spacing {spacing} s")]
    OffGridDelay { delay: f64, spacing: f64 },

    #[error("pilot placement out of range: {0}")]
    PilotOutOfRange(String),

    #[error("pilot placement overlaps an existing pilot at ({0}, {1})")]
    PilotOverlap(usize, usize),

    #[error("bisection bracket does not straddle the power target")]
    InfeasibleBracket,

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("problem size exceeds the guard: {0}")]
    SizeGuard(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
