use thiserror::Error;

use crate::duhamel::PicardReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside the range an operation is defined on.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{n_points} sample points cannot resolve {max_mode} modes without aliasing (need at least {})", 2 * max_mode + 1)]
    Aliasing { n_points: usize, max_mode: usize },

    #[error("mode truncation mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },

    #[error("time grids differ")]
    GridMismatch,

    #[error("Picard iteration did not converge after {} iterations (last difference {:.3e})", .0.iterations(), .0.last_difference())]
    NotConverged(Box<PicardReport>),

    #[error("L2 norm grew at step {step}: {before:.17e} -> {after:.17e}")]
    Unstable { step: usize, before: f64, after: f64 },

    #[error("slope fit needs at least {needed} points, got {got}")]
    DegenerateFit { needed: usize, got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for errors caused by the caller's inputs rather than by the numerics.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Precondition(_)
                | Error::Aliasing { .. }
                | Error::ModeMismatch { .. }
                | Error::GridMismatch
                | Error::Parse { .. }
        )
    }
}
