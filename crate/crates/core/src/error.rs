use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid policy parameters: {0}")]
    InvalidPolicyParams(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("grid mismatch: {left} vs {right} subdivisions")]
    GridMismatch { left: usize, right: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("action {0} is not in the action set")]
    UnknownAction(i64),

    #[error("state index {index} out of range for grid with {len} points")]
    StateOutOfRange { index: usize, len: usize },

    #[error("type index {index} out of range for {types} agent types")]
    TypeOutOfRange { index: usize, types: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("oracle requires full model")]
    OracleRequiresFullModel,
}

pub type Result<T> = std::result::Result<T, Error>;
