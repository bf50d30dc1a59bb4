use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error(
        "matrix is rank deficient: |R[{index}][{index}]| = {value:e} below tolerance {tolerance:e}"
    )]
    Singular {
        index: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("{op} did not converge after {iterations} iterations")]
    NoConvergence { op: &'static str, iterations: usize },

    #[error("matrix is not symmetric (max relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("iteration {k} is beyond the end of the step schedule ({total} iterations)")]
    OutOfSchedule { k: usize, total: usize },

    #[error("iteration diverged at k = {iteration}: relative error {relative_error:e}")]
    Divergence {
        iteration: usize,
        relative_error: f64,
    },

    #[error("step size {alpha:e} is not below the admissible ceiling {ceiling:e}")]
    StepSizeAboveCeiling { alpha: f64, ceiling: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by the numbers themselves rather than by the inputs'
    /// shape or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::NoConvergence { .. } | Error::Divergence { .. }
        )
    }
}
