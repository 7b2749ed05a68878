use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: entry ({row},{col}) = {a} but ({col},{row}) = {b}")]
    NonSymmetric { row: usize, col: usize, a: f64, b: f64 },

    #[error("invalid block boundaries: {0}")]
    BadBoundaries(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("operation requires a {expected} kernel")]
    WrongVariant { expected: &'static str },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("enumeration of {states:.3e} states exceeds the budget of {budget:.3e}")]
    BudgetExceeded { states: f64, budget: f64 },

    #[error("the constrained configuration space is empty")]
    EmptyConstraintSet,

    #[error("covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateCovariance { min_eigenvalue: f64 },

    #[error("overlap sequence is not monotone at level {level} (smallest eigenvalue of increment {min_eigenvalue:e})")]
    NonMonotoneQ { level: usize, min_eigenvalue: f64 },

    #[error("value(β)/β is not monotone in β: {0}")]
    NonMonotoneSequence(String),

    #[error("block kernel matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("unknown verification suite `{0}`")]
    SuiteUnknown(String),

    #[error("task `{task}` failed: {source}")]
    TaskFailed {
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
