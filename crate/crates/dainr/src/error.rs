use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("backward called on an empty tape")]
    EmptyTape,
    #[error("non-finite gradient in parameter {index}")]
    NonFiniteGradient { index: usize },
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("SVD did not converge after {0} sweeps")]
    SvdNoConvergence(usize),
    #[error("sequence is constant and cannot be normalized")]
    ConstantSequence,
    #[error("ROI mask is empty")]
    EmptyMask,
    #[error("ground truth required: {0}")]
    MissingGroundTruth(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
