use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported spacetime dimension {0} (supported: 2, 3, 4)")]
    UnsupportedDimension(usize),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("grid resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("operation not representable: {0}")]
    NotRepresentable(String),

    #[error("invalid shell configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature cutoff too small: spectrum at cutoff is {ratio:.3e} of its peak (limit {limit:.1e})")]
    CutoffTooSmall { ratio: f64, limit: f64 },

    #[error("kernel {kernel} cannot be used here: {reason}")]
    KernelUnsupported { kernel: &'static str, reason: String },

    #[error("zero-norm mode {0}: self-pairing below tolerance")]
    ZeroNorm(String),

    #[error("state is not normalizable (norm {0:.3e})")]
    NotNormalizable(f64),

    #[error("moment order {order} exceeds the limit {limit}")]
    OrderTooLarge { order: usize, limit: usize },

    #[error("matrix is not positive semi-definite: min eigenvalue {min_eigenvalue:.3e}, trace {trace:.3e}")]
    NotPositiveSemiDefinite { min_eigenvalue: f64, trace: f64 },

    #[error("unknown label {0}")]
    UnknownLabel(String),

    #[error("duplicate mode id {0}")]
    DuplicateMode(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
