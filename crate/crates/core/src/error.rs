use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Location of a failed Cholesky factorisation.
#[derive(Debug, Clone, PartialEq)]
pub struct PdFailure {
    /// Coordinate axis of the one-dimensional Gram matrix, `None` for a dense
    /// multi-dimensional Gram matrix.
    pub dim: Option<usize>,
    /// Level of the point set, `None` for a dense Gram matrix.
    pub level: Option<i64>,
    /// Row at which a nonpositive pivot was found.
    pub pivot: usize,
    /// Order of the matrix.
    pub size: usize,
}

impl fmt::Display for PdFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.dim, self.level) {
            (Some(dim), Some(level)) => write!(
                f,
                "1D Gram matrix for coordinate {dim} at level {level} ({0}x{0}) is not positive definite (pivot {1})",
                self.size, self.pivot
            ),
            _ => write!(
                f,
                "dense Gram matrix ({0}x{0}) is not positive definite (pivot {1})",
                self.size, self.pivot
            ),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0}")]
    PdFailure(PdFailure),
    #[error("problem size {n} exceeds the cap of {cap}")]
    SizeGuard { n: usize, cap: usize },
    #[error("divergent series: {0}")]
    DivergentSeries(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("target function has zero norm on the sample set")]
    DegenerateTarget,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: usize, got: usize) -> Self {
        Error::Shape { expected, got }
    }
}
