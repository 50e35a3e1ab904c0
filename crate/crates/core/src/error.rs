use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Validation failures for a single periodic function. Indices refer to the
/// supplied breakpoint list.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionError {
    #[error("period must be finite and positive, got {0}")]
    BadPeriod(f64),
    #[error("at least one breakpoint is required")]
    Empty,
    #[error("first breakpoint must sit at t = 0, got {0}")]
    FirstNotAtZero(f64),
    #[error("breakpoint {index} is not finite")]
    NonFinite { index: usize },
    #[error("breakpoint {index} at t = {t} lies outside [0, period]")]
    OutOfRange { index: usize, t: f64 },
    #[error("breakpoint {index} at t = {t} is out of order")]
    NotIncreasing { index: usize, t: f64 },
    #[error("breakpoint {index}: value {value} is negative")]
    Negative { index: usize, value: f64 },
    #[error("breakpoint {index}: lag {value} is not positive")]
    NonPositiveLag { index: usize, value: f64 },
    #[error("breakpoint {index}: lag functions must be continuous")]
    Discontinuous { index: usize },
    #[error("period {found} differs from the equation period {expected}")]
    PeriodMismatch { expected: f64, found: f64 },
}

impl FunctionError {
    /// Breakpoint index the failure is anchored to, if any.
    pub fn index(&self) -> Option<usize> {
        match *self {
            FunctionError::NonFinite { index }
            | FunctionError::OutOfRange { index, .. }
            | FunctionError::NotIncreasing { index, .. }
            | FunctionError::Negative { index, .. }
            | FunctionError::NonPositiveLag { index, .. }
            | FunctionError::Discontinuous { index } => Some(index),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field}: {source}")]
    InvalidFunction {
        field: String,
        #[source]
        source: FunctionError,
    },
    #[error("invalid equation: {0}")]
    InvalidEquation(String),
    #[error("integration bounds out of order: s = {s} > t = {t}")]
    ArgumentOrder { s: f64, t: f64 },
    #[error("kernel depth must lie in 1..={max}, got {depth}")]
    InvalidDepth { depth: usize, max: usize },
    #[error("{0}")]
    OutsideDomain(String),
    #[error("alpha = {0} exceeds 1/e; lambda = exp(alpha * lambda) has no real root")]
    NoRealRoot(f64),
    #[error("inapplicable: {0}")]
    Inapplicable(String),
    #[error("envelope of delay {0} has no valid periodic tail")]
    EnvelopeNotPeriodic(usize),
    #[error("history starts at {start} but delayed lookups reach back to {needed}")]
    InsufficientHistory { start: f64, needed: f64 },
    #[error("step {step} is not below the minimum lag {min_lag}")]
    StepTooLarge { step: f64, min_lag: f64 },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
