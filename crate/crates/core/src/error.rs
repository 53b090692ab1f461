use thiserror::Error;

/// Errors raised by the model, discretization and drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function (e.g. `b(r)` for `r <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// The scenario or nonlinearity description is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two states or vectors do not live on the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A quantity evaluated to NaN or infinity.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Time samples were supplied out of order.
    #[error("non-monotone time sequence: {0}")]
    NonMonotoneTime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
