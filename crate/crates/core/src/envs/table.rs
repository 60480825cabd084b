//! Small explicit-table environments used as hand-checkable oracle targets.

use serde::{Deserialize, Serialize};

use super::{check_row, GameModel};
use crate::error::{Error, Result};
use crate::grid::{ActionSet, DiscountFactor, PopulationDistribution, StateGrid};
use crate::policy::FeatureKind;

/// Population coupling of a transition kernel.
///
/// Every row moves `shift = slope * sum_k weights[k] * (E[z_k] - 1/2)` units of
/// mass from state `from` to state `to`. The kernel entries are therefore
/// Lipschitz in the joint W1 metric with constant `slope * max_k |weights[k]|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCoupling {
    pub slope: f64,
    pub weights: Vec<f64>,
    pub from: usize,
    pub to: usize,
}

impl LinearCoupling {
    pub fn shift(&self, zs: &[PopulationDistribution]) -> f64 {
        self.slope * self.weights.iter().zip(zs).map(|(w, z)| w * (z.mean() - 0.5)).sum::<f64>()
    }

    /// Largest possible `|shift|` over all populations.
    pub fn max_shift(&self) -> f64 {
        self.slope.abs() * self.weights.iter().map(|w| w.abs()).sum::<f64>() / 2.0
    }

    pub fn lipschitz(&self) -> f64 {
        self.slope.abs() * self.weights.iter().fold(0.0, |acc: f64, w| acc.max(w.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableTypeSpec {
    pub actions: Vec<i64>,
    /// `kernel[x][a][x']`.
    pub kernel: Vec<Vec<Vec<f64>>>,
    /// `reward[x][a]`.
    pub reward: Vec<Vec<f64>>,
    #[serde(default)]
    pub coupling: Option<LinearCoupling>,
    #[serde(default = "default_features")]
    pub features: FeatureKind,
}

fn default_features() -> FeatureKind {
    FeatureKind::StateActionIndicator
}

/// Description of a small table environment (at most 3 states and 2 actions per type).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestEnvSpec {
    pub name: String,
    pub gamma: f64,
    /// Grid subdivisions; the grid has `n + 1` states.
    pub n: usize,
    pub types: Vec<TableTypeSpec>,
}

#[derive(Debug, Clone)]
struct TableType {
    actions: ActionSet,
    kernel: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<f64>>,
    coupling: Option<LinearCoupling>,
    features: FeatureKind,
}

#[derive(Debug, Clone)]
pub struct TableModel {
    name: String,
    grid: StateGrid,
    gamma: DiscountFactor,
    types: Vec<TableType>,
    reward_bound: f64,
}

impl TableModel {
    pub fn new(spec: TestEnvSpec) -> Result<Self> {
        let bad = |msg: String| Error::InvalidModel(format!("{}: {msg}", spec.name));
        if spec.n == 0 || spec.n > 2 {
            return Err(bad(format!("table environments have 2 or 3 states, got n = {}", spec.n)));
        }
        if spec.types.len() < 2 {
            return Err(bad("at least two agent types are required".into()));
        }
        let grid = StateGrid::new(spec.n)?;
        let gamma = DiscountFactor::new(spec.gamma)?;
        let states = grid.len();
        let num_types = spec.types.len();
        let mut types = Vec::with_capacity(spec.types.len());
        let mut reward_bound: f64 = 0.0;
        for (j, t) in spec.types.into_iter().enumerate() {
            let actions = ActionSet::new(t.actions).map_err(|e| bad(format!("type {j}: {e}")))?;
            if actions.len() > 2 {
                return Err(bad(format!("type {j}: at most two actions are supported")));
            }
            if t.kernel.len() != states || t.reward.len() != states {
                return Err(bad(format!("type {j}: kernel and reward need one entry per state")));
            }
            let max_shift = t.coupling.as_ref().map_or(0.0, |c| c.max_shift());
            if let Some(c) = &t.coupling {
                if c.weights.len() != num_types {
                    return Err(bad(format!("type {j}: coupling needs one weight per type")));
                }
                if c.from >= states || c.to >= states || c.from == c.to || !c.slope.is_finite() {
                    return Err(bad(format!("type {j}: malformed coupling")));
                }
            }
            for (x, (rows, rewards)) in t.kernel.iter().zip(&t.reward).enumerate() {
                if rows.len() != actions.len() || rewards.len() != actions.len() {
                    return Err(bad(format!("type {j}, state {x}: need one row per action")));
                }
                for (a, row) in rows.iter().enumerate() {
                    check_row(row, states).map_err(|e| bad(format!("type {j}, state {x}, action {a}: {e}")))?;
                    if let Some(c) = &t.coupling {
                        if row[c.from] < max_shift || row[c.to] < max_shift {
                            return Err(bad(format!(
                                "type {j}, state {x}, action {a}: coupling can push the row outside the simplex"
                            )));
                        }
                    }
                }
                for r in rewards {
                    if !r.is_finite() {
                        return Err(bad(format!("type {j}, state {x}: non-finite reward")));
                    }
                    reward_bound = reward_bound.max(r.abs());
                }
            }
            types.push(TableType {
                actions,
                kernel: t.kernel,
                reward: t.reward,
                coupling: t.coupling,
                features: t.features,
            });
        }
        Ok(Self { name: spec.name, grid, gamma, types, reward_bound })
    }

    pub fn coupling(&self, type_index: usize) -> Option<&LinearCoupling> {
        self.types[type_index].coupling.as_ref()
    }

    /// Analytic Lipschitz constant of the kernel entries in the joint W1 metric.
    pub fn declared_kernel_lipschitz(&self) -> f64 {
        self.types.iter().filter_map(|t| t.coupling.as_ref()).map(|c| c.lipschitz()).fold(0.0, f64::max)
    }
}

impl GameModel for TableModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_types(&self) -> usize {
        self.types.len()
    }

    fn grid(&self, _type_index: usize) -> StateGrid {
        self.grid
    }

    fn actions(&self, type_index: usize) -> &ActionSet {
        &self.types[type_index].actions
    }

    fn gamma(&self) -> DiscountFactor {
        self.gamma
    }

    fn reward_bound(&self) -> f64 {
        self.reward_bound
    }

    fn transition(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution]) -> Vec<f64> {
        let t = &self.types[type_index];
        let mut row = t.kernel[x][a].clone();
        if let Some(c) = &t.coupling {
            let shift = c.shift(zs);
            row[c.from] -= shift;
            row[c.to] += shift;
        }
        row
    }

    fn reward(&self, type_index: usize, x: usize, a: usize, _zs: &[PopulationDistribution]) -> f64 {
        self.types[type_index].reward[x][a]
    }

    fn feature_kind(&self, type_index: usize) -> FeatureKind {
        self.types[type_index].features
    }
}

/// Bundled table environments.
pub mod catalog {
    use super::*;

    /// Two states, two actions, two types, discount 0.9. Type 0's kernel is
    /// weakly coupled to the mean of both populations.
    pub fn two_state() -> TestEnvSpec {
        TestEnvSpec {
            name: "two_state".into(),
            gamma: 0.9,
            n: 1,
            types: vec![
                TableTypeSpec {
                    actions: vec![0, 1],
                    kernel: vec![vec![vec![0.8, 0.2], vec![0.3, 0.7]], vec![vec![0.6, 0.4], vec![0.2, 0.8]]],
                    reward: vec![vec![0.0, -0.3], vec![1.0, 0.6]],
                    coupling: Some(LinearCoupling { slope: 0.2, weights: vec![0.5, 0.5], from: 0, to: 1 }),
                    features: FeatureKind::StateActionIndicator,
                },
                TableTypeSpec {
                    actions: vec![0, 1],
                    kernel: vec![vec![vec![0.5, 0.5], vec![0.85, 0.15]], vec![vec![0.3, 0.7], vec![0.6, 0.4]]],
                    reward: vec![vec![-0.5, 0.2], vec![0.4, 0.0]],
                    coupling: None,
                    features: FeatureKind::StateActionIndicator,
                },
            ],
        }
    }

    /// Three states, two actions, two types. Transition rows do not depend on
    /// the current state, action 1 dominates for every population, and type
    /// 0's kernel moves mass between the two lowest states in proportion to
    /// its own population mean (slope 0.8). The population map is a
    /// contraction with modulus 0.4.
    pub fn contracting() -> TestEnvSpec {
        let rows = |a0: [f64; 3], a1: [f64; 3]| vec![vec![a0.to_vec(), a1.to_vec()]; 3];
        let reward = vec![vec![-0.5, 0.0], vec![0.0, 0.5], vec![0.5, 1.0]];
        TestEnvSpec {
            name: "contracting".into(),
            gamma: 0.5,
            n: 2,
            types: vec![
                TableTypeSpec {
                    actions: vec![0, 1],
                    kernel: rows([0.5, 0.4, 0.1], [0.4, 0.4, 0.2]),
                    reward: reward.clone(),
                    coupling: Some(LinearCoupling { slope: 0.8, weights: vec![1.0, 0.0], from: 0, to: 1 }),
                    features: FeatureKind::ActionIndicator,
                },
                TableTypeSpec {
                    actions: vec![0, 1],
                    kernel: rows([0.3, 0.3, 0.4], [0.2, 0.3, 0.5]),
                    reward,
                    coupling: None,
                    features: FeatureKind::ActionIndicator,
                },
            ],
        }
    }

    /// Identity kernel under both actions, zero reward.
    pub fn identity() -> TestEnvSpec {
        let ty = TableTypeSpec {
            actions: vec![0, 1],
            kernel: vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]],
            reward: vec![vec![0.0, 0.0]; 2],
            coupling: None,
            features: FeatureKind::StateActionIndicator,
        };
        TestEnvSpec { name: "identity".into(), gamma: 0.9, n: 1, types: vec![ty.clone(), ty] }
    }

    /// Single action, deterministic swap between the two states.
    pub fn cycle() -> TestEnvSpec {
        let ty = TableTypeSpec {
            actions: vec![0],
            kernel: vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
            reward: vec![vec![0.0], vec![1.0]],
            coupling: None,
            features: FeatureKind::ActionIndicator,
        };
        TestEnvSpec { name: "cycle".into(), gamma: 0.9, n: 1, types: vec![ty.clone(), ty] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_are_valid() {
        for spec in [catalog::two_state(), catalog::contracting(), catalog::identity(), catalog::cycle()] {
            let name = spec.name.clone();
            TableModel::new(spec).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn rejects_rows_not_summing_to_one() {
        let mut spec = catalog::two_state();
        spec.types[1].kernel[0][1] = vec![0.5, 0.4];
        let err = TableModel::new(spec).unwrap_err();
        assert!(err.to_string().contains("sums to"), "{err}");
    }

    #[test]
    fn rejects_coupling_without_room() {
        let mut spec = catalog::two_state();
        spec.types[0].coupling.as_mut().unwrap().slope = 1.0;
        assert!(TableModel::new(spec).is_err());
    }

    #[test]
    fn rejects_oversized_tables() {
        let mut spec = catalog::identity();
        spec.n = 3;
        assert!(TableModel::new(spec).is_err());
        let mut spec = catalog::identity();
        spec.types.truncate(1);
        assert!(TableModel::new(spec).is_err());
    }

    #[test]
    fn coupling_shifts_mass_linearly() {
        let model = TableModel::new(catalog::contracting()).unwrap();
        let grid = model.grid(0);
        let low = vec![PopulationDistribution::point_mass(grid, 0).unwrap(), PopulationDistribution::uniform(grid)];
        let row = model.transition(0, 2, 1, &low);
        // shift = 0.8 * (0 - 0.5) = -0.4
        assert!((row[0] - 0.8).abs() < 1e-15 && row[1].abs() < 1e-15);
        assert!((model.declared_kernel_lipschitz() - 0.8).abs() < 1e-15);
    }
}
