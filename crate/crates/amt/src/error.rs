use thiserror::Error;

/// Errors raised by the library's validating constructors and runners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be finite, got {value}")]
    NonFiniteInput { what: &'static str, value: f64 },

    #[error("{what} must lie in the open unit interval, got {value}")]
    ProbabilityOutOfRange { what: &'static str, value: f64 },

    #[error("{what} must lie in [0, 1], got {value}")]
    NotAProbability { what: &'static str, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{what} must be positive")]
    NotPositive { what: &'static str },

    #[error("empty input: {what}")]
    Empty { what: &'static str },

    #[error("successes ({successes}) exceed trial count ({trials})")]
    SuccessesExceedTrials { successes: u64, trials: u64 },

    #[error("stream capacity exceeded: requested {requested} with {remaining} remaining")]
    CapacityExceeded { requested: usize, remaining: usize },

    #[error("stream capacity {found} does not match required {required}")]
    CapacityMismatch { required: usize, found: usize },

    #[error("first batch size {h1} exceeds sample cap {n}")]
    BatchLargerThanCap { h1: usize, n: usize },

    #[error("batch growth factor must exceed 1, got {gamma}")]
    InvalidGrowthFactor { gamma: f64 },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
