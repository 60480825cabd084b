//! Value iteration and exact policy evaluation on the MDP obtained by
//! freezing every population.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::envs::{check_row, GameModel};
use crate::error::{Error, Result};
use crate::grid::{ActionSet, PopulationDistribution};
use crate::policy::TabularPolicy;

/// Q-values within this distance of the maximum count as ties.
pub const TIE_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 1_000_000;

/// The single-agent MDP seen by type `j` when all populations are held fixed.
#[derive(Debug, Clone)]
pub struct FrozenMdp {
    pub gamma: f64,
    pub actions: ActionSet,
    /// `kernel[x][a][x']`.
    pub kernel: Vec<Vec<Vec<f64>>>,
    /// `reward[x][a]`.
    pub reward: Vec<Vec<f64>>,
}

impl FrozenMdp {
    pub fn new(model: &dyn GameModel, type_index: usize, zs: &[PopulationDistribution]) -> Result<Self> {
        model.check_type(type_index)?;
        model.check_populations(zs)?;
        if !model.exposes_kernel() {
            return Err(Error::OracleRequiresFullModel);
        }
        let states = model.grid(type_index).len();
        let actions = model.actions(type_index).clone();
        let mut kernel = Vec::with_capacity(states);
        let mut reward = Vec::with_capacity(states);
        for x in 0..states {
            let mut rows = Vec::with_capacity(actions.len());
            let mut rs = Vec::with_capacity(actions.len());
            for a in 0..actions.len() {
                let row = model.transition(type_index, x, a, zs);
                check_row(&row, states)
                    .map_err(|e| Error::InvalidModel(format!("type {type_index}, state {x}, action {a}: {e}")))?;
                rows.push(row);
                rs.push(model.reward(type_index, x, a, zs));
            }
            kernel.push(rows);
            reward.push(rs);
        }
        Ok(Self { gamma: model.gamma().value(), actions, kernel, reward })
    }

    pub fn num_states(&self) -> usize {
        self.kernel.len()
    }

    /// One Bellman backup `Q(x, a) = r(x, a) + gamma * sum_x' tau(x' | x, a) V(x')`.
    pub fn backup(&self, values: &[f64]) -> Vec<Vec<f64>> {
        self.kernel
            .iter()
            .zip(&self.reward)
            .map(|(rows, rs)| {
                rows.iter()
                    .zip(rs)
                    .map(|(row, r)| r + self.gamma * row.iter().zip(values).map(|(p, v)| p * v).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    /// State-transition matrix and reward vector under a tabular policy.
    fn policy_chain(&self, policy: &TabularPolicy) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.num_states();
        let mut p = DMatrix::zeros(n, n);
        let mut r = DVector::zeros(n);
        for x in 0..n {
            for (a, pa) in policy.rows[x].iter().enumerate() {
                r[x] += pa * self.reward[x][a];
                for (y, t) in self.kernel[x][a].iter().enumerate() {
                    p[(x, y)] += pa * t;
                }
            }
        }
        (p, r)
    }

    /// Solves `(I - gamma P_pi) V = r_pi`.
    pub fn evaluate(&self, policy: &TabularPolicy) -> Result<Vec<f64>> {
        if policy.num_states() != self.num_states() || policy.actions != self.actions {
            return Err(Error::LengthMismatch { expected: self.num_states(), actual: policy.num_states() });
        }
        let n = self.num_states();
        let (p, r) = self.policy_chain(policy);
        let a = DMatrix::identity(n, n) - p * self.gamma;
        let v = a
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::InvalidModel("policy evaluation system is singular".into()))?;
        Ok(v.iter().copied().collect())
    }

    /// `P_pi` as nested rows, `chain[x][y]`.
    pub fn transition_under(&self, policy: &TabularPolicy) -> Vec<Vec<f64>> {
        let (p, _) = self.policy_chain(policy);
        (0..p.nrows()).map(|x| p.row(x).iter().copied().collect()).collect()
    }
}

/// Values and Q-values of one agent type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub type_index: usize,
    pub values: Vec<f64>,
    /// `qvalues[x][a]`.
    pub qvalues: Vec<Vec<f64>>,
    pub sweeps: usize,
}

fn greedy(actions: &ActionSet, qvalues: &[Vec<f64>], soften_tau: f64) -> TabularPolicy {
    let rows = qvalues
        .iter()
        .map(|q| {
            let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if soften_tau > 0.0 {
                let exps: Vec<f64> = q.iter().map(|v| ((v - max) / soften_tau).exp()).collect();
                let total: f64 = exps.iter().sum();
                exps.into_iter().map(|e| e / total).collect()
            } else {
                let best = q.iter().position(|v| *v >= max - TIE_TOL).unwrap_or(0);
                let mut row = vec![0.0; q.len()];
                row[best] = 1.0;
                row
            }
        })
        .collect();
    TabularPolicy { actions: actions.clone(), rows }
}

/// Best response of type `type_index` to frozen populations `zs`.
///
/// Runs value iteration until the sup-norm change drops below
/// `tol * (1 - gamma) / (2 * gamma)`, then returns the greedy policy (lowest
/// action index among ties), or `softmax(Q / soften_tau)` when
/// `soften_tau > 0`.
pub fn best_response(
    model: &dyn GameModel,
    type_index: usize,
    zs: &[PopulationDistribution],
    tol: f64,
    soften_tau: f64,
) -> Result<(ValueTable, TabularPolicy)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("value-iteration tolerance {tol} must be positive")));
    }
    if !(soften_tau >= 0.0) {
        return Err(Error::InvalidConfig(format!("soften_tau {soften_tau} must be non-negative")));
    }
    let mdp = FrozenMdp::new(model, type_index, zs)?;
    let gamma = mdp.gamma;
    let threshold = tol * (1.0 - gamma) / (2.0 * gamma);
    let mut values = vec![0.0; mdp.num_states()];
    let mut sweeps = 0;
    loop {
        let q = mdp.backup(&values);
        let next: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let delta = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        values = next;
        sweeps += 1;
        if delta < threshold || sweeps >= MAX_SWEEPS {
            break;
        }
    }
    let qvalues = mdp.backup(&values);
    let values: Vec<f64> = qvalues.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let policy = greedy(&mdp.actions, &qvalues, soften_tau);
    Ok((ValueTable { type_index, values, qvalues, sweeps }, policy))
}

/// Exact `V^pi` for a fixed tabular policy via a direct linear solve.
pub fn policy_evaluation(
    model: &dyn GameModel,
    type_index: usize,
    policy: &TabularPolicy,
    zs: &[PopulationDistribution],
) -> Result<Vec<f64>> {
    FrozenMdp::new(model, type_index, zs)?.evaluate(policy)
}

/// `Q^pi` from `V^pi`.
pub fn q_from_values(
    model: &dyn GameModel,
    type_index: usize,
    values: &[f64],
    zs: &[PopulationDistribution],
) -> Result<Vec<Vec<f64>>> {
    Ok(FrozenMdp::new(model, type_index, zs)?.backup(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{catalog, CyberModel, CyberParams, TableModel};

    #[test]
    fn myopic_defender_at_zero_stays_idle() {
        let model = CyberModel::new(CyberParams { gamma: 0.05, ..CyberParams::default() }).unwrap();
        let zs = model.uniform_populations();
        let (table, policy) = best_response(&model, 0, &zs, 1e-10, 0.0).unwrap();
        // Q(0, 1) = 0 + gamma * E[V], Q(0, 0) = -0.5 + gamma * V(0)
        assert!(table.qvalues[0][1] > table.qvalues[0][0]);
        assert_eq!(policy.rows[0], vec![0.0, 1.0]);
    }

    #[test]
    fn single_action_value_matches_linear_solve() {
        let model = TableModel::new(catalog::cycle()).unwrap();
        let zs = model.uniform_populations();
        let tol = 1e-9;
        let (table, policy) = best_response(&model, 0, &zs, tol, 0.0).unwrap();
        // V(0) = gamma V(1), V(1) = 1 + gamma V(0)  =>  V(1) = 1 / (1 - gamma^2)
        let g: f64 = 0.9;
        let v1 = 1.0 / (1.0 - g * g);
        let v0 = g * v1;
        assert!((table.values[0] - v0).abs() < tol);
        assert!((table.values[1] - v1).abs() < tol);
        let exact = policy_evaluation(&model, 0, &policy, &zs).unwrap();
        assert!((exact[0] - v0).abs() < 1e-12 && (exact[1] - v1).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_breaks_ties_to_first_action() {
        let model = TableModel::new(catalog::identity()).unwrap();
        let zs = model.uniform_populations();
        let (table, policy) = best_response(&model, 1, &zs, 1e-8, 0.0).unwrap();
        assert!(table.values.iter().all(|v| *v == 0.0));
        for row in &policy.rows {
            assert_eq!(row, &vec![1.0, 0.0]);
        }
    }

    #[test]
    fn softened_policy_is_softmax_of_q() {
        let model = TableModel::new(catalog::two_state()).unwrap();
        let zs = model.uniform_populations();
        let (table, policy) = best_response(&model, 0, &zs, 1e-10, 0.5).unwrap();
        for (q, row) in table.qvalues.iter().zip(&policy.rows) {
            let ratio = row[1] / row[0];
            assert!((ratio - ((q[1] - q[0]) / 0.5).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive_tolerance() {
        let model = TableModel::new(catalog::identity()).unwrap();
        let zs = model.uniform_populations();
        assert!(best_response(&model, 0, &zs, 0.0, 0.0).is_err());
        assert!(best_response(&model, 5, &zs, 1e-6, 0.0).is_err());
    }

    struct Leaky;

    impl GameModel for Leaky {
        fn name(&self) -> &str {
            "leaky"
        }
        fn num_types(&self) -> usize {
            2
        }
        fn grid(&self, _: usize) -> crate::grid::StateGrid {
            crate::grid::StateGrid::new(1).unwrap()
        }
        fn actions(&self, _: usize) -> &ActionSet {
            static SET: std::sync::OnceLock<ActionSet> = std::sync::OnceLock::new();
            SET.get_or_init(|| ActionSet::new(vec![0]).unwrap())
        }
        fn gamma(&self) -> crate::grid::DiscountFactor {
            crate::grid::DiscountFactor::new(0.5).unwrap()
        }
        fn reward_bound(&self) -> f64 {
            0.0
        }
        fn transition(&self, _: usize, _: usize, _: usize, _: &[PopulationDistribution]) -> Vec<f64> {
            vec![0.5, 0.3]
        }
        fn reward(&self, _: usize, _: usize, _: usize, _: &[PopulationDistribution]) -> f64 {
            0.0
        }
        fn feature_kind(&self, _: usize) -> crate::policy::FeatureKind {
            crate::policy::FeatureKind::ActionIndicator
        }
    }

    #[test]
    fn non_stochastic_kernel_is_an_error() {
        let zs = Leaky.uniform_populations();
        let err = best_response(&Leaky, 0, &zs, 1e-6, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)), "{err}");
    }
}
