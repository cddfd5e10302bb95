use thiserror::Error;

/// Errors produced by construction, validation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel symmetry violation at ({i},{j}): {lhs} vs {rhs}")]
    SymmetryViolation { i: usize, j: usize, lhs: f64, rhs: f64 },

    #[error("negative kernel entry at ({i},{j}): {value}")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("measures live on different state spaces")]
    SpaceMismatch,

    #[error("expected a probability measure, total mass is {mass}")]
    NotProbability { mass: f64 },

    #[error("step size too large: |h| reached {value} at t = {t}")]
    StepSize { t: f64, value: f64 },

    #[error("density went negative ({value} at point {index}) at step {step}; reduce dt")]
    NegativityAbort { step: usize, index: usize, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
