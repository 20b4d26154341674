use thiserror::Error;

/// Errors raised by geometric-state computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GqsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not supported here: {1}")]
    UnsupportedDimension(usize, &'static str),

    #[error("vector is not normalizable (norm {0:e})")]
    ZeroNorm(f64),

    #[error("state is not normalized: total probability {0}")]
    NotNormalized(f64),

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("effects do not sum to the identity (max deviation {0:e})")]
    EffectsNotComplete(f64),

    #[error("trace is not one: {0}")]
    TraceNotOne(f64),

    #[error("resolution too coarse: successive refinements give {coarse} and {fine} (relative difference {relative:e})")]
    CoarseResolution { coarse: f64, fine: f64, relative: f64 },

    #[error("environment label {label} out of range for dimension {dim}")]
    LabelOutOfRange { label: usize, dim: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl GqsError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        GqsError::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, GqsError>;
