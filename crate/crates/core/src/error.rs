use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A propensity evaluated to a negative or non-finite value.
    #[error("reaction {reaction}: invalid propensity value {value}")]
    InvalidPropensity { reaction: usize, value: f64 },

    /// A state update would drive a species count below zero.
    #[error("species {species} would become negative ({count})")]
    StateUnderflow { species: usize, count: i64 },

    #[error("invalid rate {0}")]
    InvalidRate(f64),

    #[error("model error: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sample {index} failed: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("model file: {0}")]
    Schema(String),
}
