//! Winning probabilities of two-alternative elections when abstaining
//! agents may instead hand their vote to a uniformly random voter.
//!
//! The crate evaluates conventional voting, free delegation and capped
//! delegation over a random number of voters, simulates the same elections,
//! and checks the weighted-voting bound by subset enumeration.

pub mod distributions;
pub mod engine;
pub mod error;
pub mod exact;
pub mod kernels;
pub mod report;
pub mod simulator;
pub mod special;
pub mod weighted;

pub use distributions::{poisson_type_marginal, Truncation, TruncationBudget, VoterCountDistribution};
pub use engine::{DelegationPolicy, WinProbability};
pub use error::{Error, Result};
pub use exact::ExactProbability;
pub use kernels::TallyInstance;
pub use simulator::{JointCountDistribution, SimulationConfig, SimulationReport};
pub use weighted::WeightedProfile;
