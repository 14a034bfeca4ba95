//! Base-fee market dynamics under a burn-and-tip fee rule: the update
//! mechanisms, the miner strategies that manipulate them, exact reward
//! analytics for those strategies, and a Monte Carlo engine that compares
//! mechanisms head to head on paired random trajectories.
//!
//! The crate is organized around one question — when does deviating from
//! honest block building pay? — and answers it three independent ways that
//! must agree:
//!
//! - closed-form expected rewards and thresholds ([`analytics`]),
//! - absorbing reward chains solved exactly ([`markov`]),
//! - seeded Monte Carlo trajectories ([`simulator`]).
//!
//! The fee rules themselves live in [`mechanism`] with an
//! arbitrary-precision mirror in [`exact`], and [`delay`] quantifies what a
//! mitigation costs in responsiveness. A narrative walkthrough with
//! runnable examples lives in the `book/` directory of the repository; its
//! chapters compile as doc-tests via [`guide`].

pub mod analytics;
pub mod delay;
pub mod exact;
pub mod guide;
pub mod markov;
pub mod mechanism;
pub mod params;
pub mod rng;
pub mod simulator;

pub use analytics::{Scenario, ScenarioInputs};
pub use markov::AbsorbingChain;
pub use mechanism::{ChainState, MechanismKind};
pub use params::{Bidding, DemandParams, MinerPowers, ProtocolParams};
pub use simulator::{RunOutcome, SimConfig, SimSummary};
