use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration. The message names the offending key.
    #[error("configuration error: {0}")]
    Config(String),

    /// A control input that violates the kinematic constraints.
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// Argument outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Degenerate geometry (coincident points, gimbal lock).
    #[error("singular geometry: {0}")]
    Singularity(String),

    /// A filter could not be initialized.
    #[error("initialization error: {0}")]
    Initialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
