use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes of the inputs do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("covariance is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// A constraint row with no nonzero coefficient (`0 <= b_i`).
    #[error("constraint row {row} has no nonzero coefficient")]
    DegenerateRow { row: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid needs {required} cells but the budget allows {allowed}")]
    GridBudget { required: f64, allowed: u64 },

    /// A state that should sit inside a truncation box does not.
    #[error("point {point:?} lies outside the grid box in dimension {dim}")]
    OutsideBox { point: Vec<f64>, dim: usize },

    /// Two grids that were expected to share a lattice do not.
    #[error("grids are not aligned to a common lattice: {0}")]
    Misaligned(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
