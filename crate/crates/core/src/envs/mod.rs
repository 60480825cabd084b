//! Game models: the J-type environment interface, the cyber-attack game and
//! small hand-checkable table environments.

mod cyber;
mod table;

pub use cyber::{CyberModel, CyberParams};
pub use table::{catalog, LinearCoupling, TableModel, TableTypeSpec, TestEnvSpec};

use crate::error::{Error, Result};
use crate::grid::{sample_index, ActionSet, DiscountFactor, PopulationDistribution, StateGrid};
use crate::policy::{FeatureKind, FeatureMap};

/// A stationary multi-type mean-field game.
///
/// States and actions are addressed by index into the type's grid and action set.
/// Transition rows and rewards may depend on the populations of every type.
pub trait GameModel: Send + Sync {
    fn name(&self) -> &str;

    fn num_types(&self) -> usize;

    fn grid(&self, type_index: usize) -> StateGrid;

    fn actions(&self, type_index: usize) -> &ActionSet;

    fn gamma(&self) -> DiscountFactor;

    /// Declared bound `R_max` with `|r| <= R_max` for every input.
    fn reward_bound(&self) -> f64;

    /// Next-state distribution `tau^j(. | x, a, z)` as a vector over the type's grid.
    fn transition(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution]) -> Vec<f64>;

    fn reward(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution]) -> f64;

    /// Default Boltzmann feature class for the learner.
    fn feature_kind(&self, type_index: usize) -> FeatureKind;

    /// Draws a next state index given a uniform variate in `[0, 1)`.
    fn sample_transition(
        &self,
        type_index: usize,
        x: usize,
        a: usize,
        zs: &[PopulationDistribution],
        u: f64,
    ) -> usize {
        sample_index(&self.transition(type_index, x, a, zs), u)
    }

    /// Whether oracles may read transition rows directly.
    fn exposes_kernel(&self) -> bool {
        true
    }

    fn feature_map(&self, type_index: usize) -> Result<FeatureMap> {
        FeatureMap::new(self.feature_kind(type_index), self.grid(type_index), self.actions(type_index).clone())
    }

    fn check_type(&self, type_index: usize) -> Result<()> {
        if type_index >= self.num_types() {
            return Err(Error::TypeOutOfRange { index: type_index, types: self.num_types() });
        }
        Ok(())
    }

    /// Checks that `zs` holds one distribution per type on the matching grid.
    fn check_populations(&self, zs: &[PopulationDistribution]) -> Result<()> {
        if zs.len() != self.num_types() {
            return Err(Error::LengthMismatch { expected: self.num_types(), actual: zs.len() });
        }
        for (j, z) in zs.iter().enumerate() {
            let grid = self.grid(j);
            if z.grid() != grid {
                return Err(Error::GridMismatch { left: grid.subdivisions(), right: z.grid().subdivisions() });
            }
        }
        Ok(())
    }

    fn uniform_populations(&self) -> Vec<PopulationDistribution> {
        (0..self.num_types()).map(|j| PopulationDistribution::uniform(self.grid(j))).collect()
    }

    /// Verifies every transition row at `zs` is a probability vector.
    fn check_kernel(&self, zs: &[PopulationDistribution]) -> Result<()> {
        for j in 0..self.num_types() {
            for x in 0..self.grid(j).len() {
                for a in 0..self.actions(j).len() {
                    let row = self.transition(j, x, a, zs);
                    check_row(&row, self.grid(j).len())
                        .map_err(|e| Error::InvalidModel(format!("type {j}, state {x}, action {a}: {e}")))?;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_row(row: &[f64], len: usize) -> std::result::Result<(), String> {
    if row.len() != len {
        return Err(format!("row has {} entries, expected {len}", row.len()));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(format!("row {row:?} has a negative or non-finite entry"));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(format!("row {row:?} sums to {total}"));
    }
    Ok(())
}

/// Names accepted by [`build_named`].
pub const REGISTRY: &[(&str, &str)] = &[
    ("cyber", "defender/attacker cyber-attack game on an (n+1)-point grid"),
    ("two_state", "two-state, two-action oracle environment with weak population coupling"),
    ("contracting", "three-state environment whose population map is a verified contraction"),
    ("identity", "identity kernel with zero reward; every population is stationary"),
    ("cycle", "two-state, one-action deterministic cycle"),
];

/// Builds a registered environment. `cyber` uses the supplied parameters.
pub fn build_named(name: &str, cyber: Option<CyberParams>) -> Result<Box<dyn GameModel>> {
    Ok(match name {
        "cyber" => Box::new(CyberModel::new(cyber.unwrap_or_default())?),
        "two_state" => Box::new(TableModel::new(catalog::two_state())?),
        "contracting" => Box::new(TableModel::new(catalog::contracting())?),
        "identity" => Box::new(TableModel::new(catalog::identity())?),
        "cycle" => Box::new(TableModel::new(catalog::cycle())?),
        other => return Err(Error::InvalidConfig(format!("unknown environment `{other}`"))),
    })
}
