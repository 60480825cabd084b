//! Stationary multi-type mean-field equilibria.
//!
//! Two routes to the same object:
//!
//! * [`exact`]: with the transition kernels and rewards in hand, iterate
//!   best response followed by one population step until the populations
//!   stop moving.
//! * [`rl`]: with only a sampling simulator, learn Boltzmann policies by
//!   random-horizon policy gradient and update populations from simulated
//!   agents.
//!
//! [`envs`] holds the game models, including the defender/attacker
//! cyber-attack game.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envs;
pub mod error;
pub mod exact;
pub mod grid;
pub mod metrics;
pub mod policy;
pub mod profile;
pub mod rl;

pub use error::{Error, Result};
pub use grid::{ActionSet, DiscountFactor, PopulationDistribution, StateGrid};
pub use metrics::{joint_w1, policy_distance, w1_distance};
pub use policy::{boltzmann_probs, grad_log_policy, FeatureKind, FeatureMap, PolicyParams, TabularPolicy};
pub use profile::{EquilibriumProfile, Status};
