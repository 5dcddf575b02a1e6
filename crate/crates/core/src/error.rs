use thiserror::Error;

/// Errors raised by the estimators, projections and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PfmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("spatial median did not converge after {iterations} iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("projection is not unique: {0}")]
    DegenerateProjection(String),
    #[error("projected axes are linearly dependent (smallest singular value {0:e})")]
    DegenerateFrame(f64),
    #[error("spectral gap too small: {0}")]
    DegenerateSpectrum(String),
    #[error("difference matrix is zero at data point {0}")]
    AnchorResidual(usize),
    #[error("Hessian of the median objective is singular (condition number {0:e})")]
    SingularH(f64),
    #[error("rejection sampler stalled (acceptance rate {0:e})")]
    SamplerStalled(f64),
    #[error("Procrustes phase undefined: estimate orthogonal to reference")]
    AlignmentUndefined,
}

pub type Result<T> = std::result::Result<T, PfmError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(PfmError::InvalidInput(msg.into()))
}
