use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error(
        "covariance matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})"
    )]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("{function}: argument outside domain ({reason})")]
    Domain {
        function: &'static str,
        reason: String,
    },

    #[error(
        "lattice has 2^{log2_size} paths, above the enumeration limit 2^{limit}; reduce n, d or T"
    )]
    StateSpaceTooLarge { log2_size: usize, limit: usize },

    #[error("observation time {time} is not on the model grid (dt = {dt}, {steps} steps)")]
    DateMismatch { time: f64, dt: f64, steps: usize },

    #[error("path has {got} observations, contract needs {expected}")]
    PathLength { expected: usize, got: usize },

    #[error("discounted payoff {value} outside bounds [{min}, {max}]")]
    OutOfBounds { value: f64, min: f64, max: f64 },

    #[error("contract payoff is unbounded; normalization is undefined for {0}")]
    Unbounded(&'static str),

    #[error("target error {target:.3e} unachievable: {component} alone contributes {value:.3e}")]
    Unachievable {
        component: String,
        value: f64,
        target: f64,
    },

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("array shapes differ: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}
