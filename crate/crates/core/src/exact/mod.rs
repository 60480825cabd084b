//! Known-dynamics pipeline: per-type best responses on the frozen MDP,
//! the population-consistency operator, their composition and its fixed
//! point, plus empirical contraction diagnostics.

mod best_response;
mod contraction;
mod fixed_point;

pub use best_response::{best_response, policy_evaluation, q_from_values, FrozenMdp, ValueTable, TIE_TOL};
pub use contraction::{lemma1_constants, ContractionReport};
pub use fixed_point::{gamma_map, population_step, solve_fixed_point, ExactConfig, ExactTraceRow, GammaOutput};
