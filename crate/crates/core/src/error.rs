use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("cannot parse distribution literal `{literal}`: {reason}")]
    DistributionSyntax { literal: String, reason: String },

    #[error("truncation index {needed} exceeds the safety cap {max_support}")]
    TruncationOverflow { needed: u64, max_support: u64 },

    #[error("invalid truncation budget: {0}")]
    InvalidBudget(String),

    #[error("probability {0} is outside the admissible range")]
    InvalidProbability(f64),

    #[error("cap must be at least 1")]
    InvalidCap,

    #[error("instance (k={k}, l={l}, m={m}) exceeds the exact-oracle scale")]
    OracleScale { k: u64, l: u64, m: u64 },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("{voters} voters exceeds the enumeration cap of {cap}")]
    EnumerationCap { voters: usize, cap: usize },

    #[error("invalid simulation config: {0}")]
    InvalidSimulation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
