//! Crate-wide error type.

/// Errors surfaced by construction and verification entry points.
///
/// Numerical *verdicts* (an inequality failing on an instance) are not
/// errors; they are reported in the relevant result structs.  `Error` is for
/// inputs or constructions that cannot proceed at all.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-contract input (bad radius, unknown id, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Geometry too degenerate to work with (zero-diameter tripod arm,
    /// coincident terminals, ...).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// A construction (blocking data, counterexample layout, tripod
    /// extraction) failed after exhausting its fallbacks.
    #[error("construction failed: {0}")]
    Construction(String),

    /// JSON (de)serialization failure, with serde's line/column diagnostics.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Filesystem failure while reading/writing artifacts.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
    pub fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
}
