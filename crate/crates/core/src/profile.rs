use serde::{Deserialize, Serialize};

use crate::grid::PopulationDistribution;
use crate::policy::{PolicyParams, TabularPolicy};

/// Outcome of an outer fixed-point loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    CapExhausted,
}

/// Per-type policies and populations of a (candidate) stationary equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub policies: Vec<TabularPolicy>,
    /// Boltzmann weights when the policies came from the learner.
    pub params: Option<Vec<PolicyParams>>,
    pub populations: Vec<PopulationDistribution>,
    /// Joint W1 residual of the returned populations.
    pub residual: f64,
    /// Outer iterations performed.
    pub iterations: usize,
    pub status: Status,
}

impl EquilibriumProfile {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn means(&self) -> Vec<f64> {
        self.populations.iter().map(|z| z.mean()).collect()
    }
}
