use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("window error: {0}")]
    Window(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("polygon covers no pixel centers of the grid")]
    EmptyMask,
    #[error("plot {0} has no pixels left after the negative buffer")]
    PlotTooSmall(String),
    #[error("degenerate gaussian fit: {0}")]
    DegenerateFit(String),
    #[error("cannot stratify: {0}")]
    Stratification(String),
    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),
    #[error("feature schema mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
