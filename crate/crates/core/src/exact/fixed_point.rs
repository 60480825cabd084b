//! Population-consistency operator and the outer fixed-point iteration
//! `z <- Gamma(z) = Gamma_2(Gamma^1(z), ..., Gamma^J(z), z)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::best_response::{best_response, ValueTable};
use crate::envs::GameModel;
use crate::error::{Error, Result};
use crate::grid::PopulationDistribution;
use crate::metrics::joint_w1;
use crate::policy::TabularPolicy;
use crate::profile::{EquilibriumProfile, Status};

/// Tolerances for the exact solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactConfig {
    /// Value-iteration accuracy for each best response.
    pub bellman_tol: f64,
    /// Stop once `joint_w1(z, Gamma(z)) < eps`.
    pub eps: f64,
    pub max_outer: usize,
    /// Temperature of the softened best response; 0 keeps it greedy.
    pub soften_tau: f64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { bellman_tol: 1e-10, eps: 1e-8, max_outer: 500, soften_tau: 0.0 }
    }
}

impl ExactConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bellman_tol > 0.0) {
            return Err(Error::InvalidConfig("exact.bellman_tol must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig("exact.eps must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("exact.max_outer must be positive".into()));
        }
        if !(self.soften_tau >= 0.0) {
            return Err(Error::InvalidConfig("exact.soften_tau must be non-negative".into()));
        }
        Ok(())
    }
}

/// `z'_j(y) = sum_x sum_a tau^j(y | x, a, z) pi^j(a | x) z_j(x)`.
pub fn population_step(
    model: &dyn GameModel,
    type_index: usize,
    policy: &TabularPolicy,
    zs: &[PopulationDistribution],
) -> Result<PopulationDistribution> {
    model.check_type(type_index)?;
    model.check_populations(zs)?;
    let grid = model.grid(type_index);
    if policy.num_states() != grid.len() || policy.actions != *model.actions(type_index) {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: policy.num_states() });
    }
    let mut next = vec![0.0; grid.len()];
    for (x, zx) in zs[type_index].mass().iter().enumerate() {
        if *zx == 0.0 {
            continue;
        }
        for (a, pa) in policy.rows[x].iter().enumerate() {
            if *pa == 0.0 {
                continue;
            }
            let row = model.transition(type_index, x, a, zs);
            for (n, t) in next.iter_mut().zip(row) {
                *n += zx * pa * t;
            }
        }
    }
    PopulationDistribution::from_weights(grid, next)
}

/// Result of one application of the composed map.
#[derive(Debug, Clone)]
pub struct GammaOutput {
    pub populations: Vec<PopulationDistribution>,
    pub policies: Vec<TabularPolicy>,
    pub values: Vec<ValueTable>,
}

/// Best responses to `zs` for every type, then one population step each,
/// with the step evaluated at the pre-response populations `zs`.
pub fn gamma_map(model: &dyn GameModel, zs: &[PopulationDistribution], config: &ExactConfig) -> Result<GammaOutput> {
    model.check_populations(zs)?;
    let responses = (0..model.num_types())
        .into_par_iter()
        .map(|j| best_response(model, j, zs, config.bellman_tol, config.soften_tau))
        .collect::<Result<Vec<_>>>()?;
    let (values, policies): (Vec<_>, Vec<_>) = responses.into_iter().unzip();
    let populations = policies
        .iter()
        .enumerate()
        .map(|(j, pi)| population_step(model, j, pi, zs))
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaOutput { populations, policies, values })
}

/// One row of the exact solver's residual trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactTraceRow {
    pub outer_iter: usize,
    /// `joint_w1(z_m, Gamma(z_m))`.
    pub residual: f64,
    /// Mean state of each type at `z_m`.
    pub means: Vec<f64>,
}

/// Iterates `z <- Gamma(z)` from `z0` until the residual drops below `eps`.
///
/// On cap exhaustion the iterate with the smallest residual is returned with
/// [`Status::CapExhausted`].
pub fn solve_fixed_point(
    model: &dyn GameModel,
    z0: Vec<PopulationDistribution>,
    config: &ExactConfig,
) -> Result<(EquilibriumProfile, Vec<ExactTraceRow>)> {
    config.validate()?;
    model.check_populations(&z0)?;
    let mut z = z0;
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<PopulationDistribution>, Vec<TabularPolicy>, usize)> = None;
    for m in 1..=config.max_outer {
        let out = gamma_map(model, &z, config)?;
        let residual = joint_w1(&z, &out.populations)?;
        trace.push(ExactTraceRow { outer_iter: m, residual, means: z.iter().map(|d| d.mean()).collect() });
        if residual < config.eps {
            let profile = EquilibriumProfile {
                policies: out.policies,
                params: None,
                populations: z,
                residual,
                iterations: m,
                status: Status::Converged,
            };
            return Ok((profile, trace));
        }
        if best.as_ref().is_none_or(|b| residual < b.0) {
            best = Some((residual, z.clone(), out.policies.clone(), m));
        }
        z = out.populations;
    }
    let (residual, populations, policies, _) = best.expect("max_outer is positive");
    let profile = EquilibriumProfile {
        policies,
        params: None,
        populations,
        residual,
        iterations: config.max_outer,
        status: Status::CapExhausted,
    };
    Ok((profile, trace))
}
