use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability at index {index} is negative or not finite: {value}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("an action set needs at least two actions, got {0}")]
    TooFewActions(usize),
    #[error("action {action} out of range for {actions} actions")]
    InvalidAction { action: usize, actions: usize },
    #[error("distribution has {got} actions, expected {expected}")]
    ActionCountMismatch { expected: usize, got: usize },
    #[error("score state is empty (t = 0)")]
    EmptyState,
    #[error("score states have absorbed different step counts ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("sample is degenerate (variance {variance:e})")]
    DegenerateSample { variance: f64 },
    #[error("sample too small: {got} values, need at least {need}")]
    SampleTooSmall { got: usize, need: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
