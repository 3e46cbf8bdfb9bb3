use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Hausdorff distance (and directed distances) are undefined when a set is empty.
    #[error("Hausdorff distance is undefined for an empty set")]
    UndefinedHausdorff,

    #[error("grid of {nodes} nodes exceeds the budget of {budget} nodes")]
    GridTooLarge { nodes: usize, budget: usize },

    #[error("level set at level {level} is empty")]
    EmptyLevelSet { level: f64 },

    #[error("nothing to draw: every mode index is zero at every level")]
    NothingToDraw,

    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
