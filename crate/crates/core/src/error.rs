//! Error taxonomy shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside its allowed range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Not enough data to compute a result (e.g. a power trace with fewer
    /// than two samples, or an empty candidate set).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A power trace violates its structural invariants.
    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    /// A value failed domain validation (negative energy, PUE below 1, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Two entries claim the same unique name.
    #[error("conflict: {0}")]
    Conflict(String),

    #[error("unknown provider '{0}'")]
    UnknownProvider(String),

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("unknown region '{0}'")]
    UnknownRegion(String),

    #[error("unknown hardware profile '{0}'")]
    UnknownHardware(String),

    /// A per-ratio delta was requested for a model with no ratio-1.0 row.
    #[error("missing baseline row (ratio 1.0) for model '{0}'")]
    MissingBaseline(String),

    /// The result is mathematically undefined for the given inputs
    /// (e.g. energy per success at a zero pass rate). Never silently
    /// returns infinity.
    #[error("undefined result: {0}")]
    UndefinedResult(String),

    /// The input has no variation along the dimension being tested.
    #[error("insufficient variation: {0}")]
    InsufficientVariation(String),

    /// A document does not conform to its declared schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an I/O error with the path it occurred on.
    pub fn io_at(path: &std::path::Path, error: std::io::Error) -> Self {
        Self::Io(std::io::Error::new(
            error.kind(),
            format!("{}: {error}", path.display()),
        ))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
