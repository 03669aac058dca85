use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("singular Sylvester operator: {0}")]
    SingularOperator(String),

    #[error("Newton iteration failed to converge: residual {residual:.3e} after {iters} iterations")]
    IterationFailure { residual: f64, iters: usize },

    #[error("Newton-Kantorovich certificate invalid: {0}")]
    CertificateInvalid(String),

    #[error("stale result: input hash mismatch")]
    StaleResult,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
