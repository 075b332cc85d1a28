use thiserror::Error;

pub type Result<T> = std::result::Result<T, SleError>;

#[derive(Debug, Error)]
pub enum SleError {
    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("quadrature did not converge: achieved error {achieved:e} > tolerance {tolerance:e}")]
    Numeric { achieved: f64, tolerance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("solver failure at step {step}: {detail}")]
    Solver { step: usize, detail: String },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
