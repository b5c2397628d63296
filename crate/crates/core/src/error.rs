use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a member of the group: {0}")]
    Membership(String),
    #[error("unsupported group level {0}; supply a profile file")]
    UnsupportedGroup(u64),
    #[error("iteration limit reached after {0} steps")]
    IterationLimit(usize),
    #[error("integer overflow while composing group elements")]
    Overflow,
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("pole at {0}")]
    Pole(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("system is ill-conditioned (estimate {0:.3e})")]
    Conditioning(f64),
    #[error("singular system")]
    Singular,
    #[error("not enough coefficients: need index {need}, have {have}")]
    InsufficientCoefficients { need: usize, have: usize },
    #[error("first coefficient is zero")]
    ZeroFirstCoefficient,
    #[error("input is not monotone: {0}")]
    Monotonicity(String),
    #[error("empty input")]
    Empty,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
