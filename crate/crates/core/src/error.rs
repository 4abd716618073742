use thiserror::Error;

/// Everything that can go wrong while building or evaluating a game.
///
/// Variants name the violated invariant so front-ends can surface it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("box distribution: {0}")]
    InvalidDistribution(String),

    #[error("congestion policy: {0}")]
    InvalidPolicy(String),

    #[error("strategy matrix: {0}")]
    InvalidMatrix(String),

    #[error("profile: {0}")]
    InvalidProfile(String),

    #[error("game config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("probability {value} outside {range}")]
    ProbabilityOutOfRange { value: f64, range: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("search did not converge: {0}")]
    NoConvergence(String),

    #[error("numeric corruption: {0}")]
    Numeric(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GameError>;
