use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a Q-point needs at least one point")]
    EmptyQPoint,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate {0}")]
    NonFinite(f64),

    #[error("shape mismatch: (n={n_left}, Q={q_left}) vs (n={n_right}, Q={q_right})")]
    ShapeMismatch {
        n_left: usize,
        q_left: usize,
        n_right: usize,
        q_right: usize,
    },

    #[error("operation requires n = 1, got n = {0}")]
    RequiresScalarValues(usize),

    #[error("tuple is not ascending, so it is not the image of a Q-point")]
    NotAscending,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid functions live on different domains")]
    DomainMismatch,

    #[error("expected {expected} node values, found {found}")]
    NodeCountMismatch { expected: usize, found: usize },

    #[error("time scale must be positive and finite, got {0}")]
    InvalidTau(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("step index {k} outside 1..={steps}")]
    StepOutOfRange { k: usize, steps: usize },

    #[error("time {t} outside [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid preset parameters: {0}")]
    PresetParams(String),

    #[error("instance too large for enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Snapshot(e.to_string())
    }
}
