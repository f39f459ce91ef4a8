use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ground level of H(hx = {hx}) is degenerate (gap {gap:.3e})")]
    DegenerateGround { hx: f64, gap: f64 },

    #[error("segment {index} has negative duration {duration}")]
    NegativeDuration { index: usize, duration: f64 },

    #[error("segment {index} has non-finite duration")]
    NonFiniteDuration { index: usize },

    #[error("durations sum to {sum}, expected total duration {expected}")]
    DurationSumMismatch { sum: f64, expected: f64 },

    #[error("adjacent segments {index} and {} share level {level}", index + 1)]
    AdjacentEqualLevels { index: usize, level: char },

    #[error("control type has {levels} levels but {durations} durations")]
    LengthMismatch { levels: usize, durations: usize },

    #[error("control type must contain at least one level")]
    EmptyType,

    #[error("unknown control level {0:?} (expected P, 0 or N)")]
    UnknownLevel(char),

    #[error("time {t} lies outside [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bracket [{low}, {high}] does not straddle the {what}")]
    BracketFailure { low: f64, high: f64, what: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
