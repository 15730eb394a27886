use thiserror::Error;

/// Errors raised by the laboratory.
///
/// Variants split into input validation problems (bad shapes, operators that
/// violate a stated bound, parameters out of range) and numerical failures
/// (non-convergence, a cross-check that disagrees beyond its tolerance).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subsystem dimensions {dims:?} for a {dim}x{dim} matrix")]
    InvalidSubsystemDims { dims: Vec<usize>, dim: usize },

    #[error("subsystem index {index} out of range ({count} subsystems)")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("operator bound violated: {0}")]
    OperatorBound(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside the domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("cannot condition on an outcome of zero probability ({0:e})")]
    Conditioning(f64),

    #[error("not a valid {kind}: {reason}")]
    Invalid { kind: &'static str, reason: String },

    #[error("no violation found up to n = {cap} (J at cap = {jn_at_cap})")]
    ThresholdOverflow { cap: u32, jn_at_cap: f64 },

    #[error("numerical check failed: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::ThresholdOverflow { .. })
    }

    pub(crate) fn invalid(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            kind,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
