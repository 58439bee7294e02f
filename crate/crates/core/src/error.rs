use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("point ({x}, {y}) lies outside element ({ix}, {jy})")]
    PointOutsideElement { ix: usize, jy: usize, x: f64, y: f64 },

    #[error("non-finite {what} at ({x}, {y})")]
    NonFinite { what: &'static str, x: f64, y: f64 },

    #[error("coefficient condition violated: min(b - a_x/2) = {min} at ({x}, {y})")]
    CoefficientCondition { min: f64, x: f64, y: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mesh nodes not strictly increasing at index {index} in {axis} ({left} >= {right})")]
    NonMonotoneMesh {
        axis: char,
        index: usize,
        left: f64,
        right: f64,
    },

    #[error("numerically singular pivot at global index {index}")]
    SingularPivot { index: usize },

    #[error("relative residual {residual:e} exceeds {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("sparse solver failure: {0}")]
    Backend(String),

    #[error("run N={n}, epsilon={epsilon:e} failed: {source}")]
    Run {
        n: usize,
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the linear solve, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SingularPivot { .. } | Error::ResidualTooLarge { .. } | Error::Backend(_) => true,
            Error::Run { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
