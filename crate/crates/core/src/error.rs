use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: cannot parse {token:?} as a pocket number")]
    Parse { line: usize, token: String },

    #[error("line {line}: pocket {value} is outside 0..=36")]
    Range { line: usize, value: i64 },

    #[error("input contains no spins")]
    EmptyInput,

    #[error("input is not valid UTF-8 text: {0}")]
    Decode(String),

    #[error("split lengths sum to {expected} but the series has {actual} spins")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("split lengths must all be positive")]
    ZeroLengthSegment,

    #[error("series is empty")]
    EmptySeries,

    #[error("burn-in {burn_in} leaves no samples in a path of length {len}")]
    BurnInTooLarge { burn_in: usize, len: usize },

    #[error("chi-square test needs at least {required} spins, got {actual}")]
    InsufficientData { required: u64, actual: u64 },

    #[error("cannot average an empty stake sequence")]
    EmptySequence,

    #[error("segment is empty")]
    EmptySegment,

    #[error("override probabilities sum to {0}, which exceeds 1")]
    MassOverflow(f64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("fitted AR(1) slope {slope} is outside (0, 1); path is not mean-reverting")]
    NonStationary { slope: f64 },

    #[error("walk-forward plan has no out-of-sample segments")]
    EmptyPlan,
}
