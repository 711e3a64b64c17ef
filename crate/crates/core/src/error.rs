use thiserror::Error;

/// Errors raised by the estimators, bounds and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e} exceeds {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "infeasible pilot: training length {t_train} is shorter than the number of users {users}"
    )]
    InfeasiblePilot { t_train: usize, users: usize },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("unidentifiable support: reduced Fisher matrix condition number {condition:e}")]
    UnidentifiableSupport { condition: f64 },

    #[error("numerical failure after {iterations} iterations: {reason}")]
    NumericalFailure {
        reason: String,
        iterations: usize,
        /// Objective values of the accepted iterations up to the failure.
        objective_trace: Vec<f64>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
