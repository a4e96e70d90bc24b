//! Byzantine-tolerant random peer sampling laboratory.
//!
//! The crate bundles the protocol state machines (the seed-ranked greedy
//! sampler with hit-counter hardening, its simplified variant, and a
//! Brahms baseline with periodic sampler resets), the adversarial
//! behaviors used to attack them, a deterministic synchronous simulator
//! with the evaluation metrics, and the analytical model (mean-field ODE,
//! equilibria, isolation bounds and attacker power over IP block
//! datasets).

pub mod adversary;
pub mod analysis;
pub mod brahms;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod node;
pub mod rank;
mod seen;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
pub use rank::{NodeId, RankVector, RankingFunction, Role, Seed};
pub use seen::CorrectRange;
