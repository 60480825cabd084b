//! Linear-feature Boltzmann policies and tabular action distributions.
//!
//! A Boltzmann policy over the action set `A` at state `x` is
//!
//! ```text
//! pi(a | x) = exp(h(x, a)) / sum_b exp(h(x, b)),   h(x, a) = sum_i theta_i f_i(x, a)
//! ```
//!
//! and its score function is `f(x, a) - sum_b pi(b | x) f(x, b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ActionSet, StateGrid};

/// Named feature catalogue entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Two features for binary actions: `x * 1{a = 1}` and `(1 - x) * 1{a = 1}`.
    Cyber2,
    /// One state-independent indicator `1{a = a_k}` per action after the first.
    ActionIndicator,
    /// One indicator `1{x = s, a = a_k}` per state and per action after the first.
    StateActionIndicator,
}

impl FeatureKind {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::Cyber2 => "cyber2",
            FeatureKind::ActionIndicator => "action_indicator",
            FeatureKind::StateActionIndicator => "state_action_indicator",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [FeatureKind::Cyber2, FeatureKind::ActionIndicator, FeatureKind::StateActionIndicator]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

/// Feature map bound to the grid and action set of one agent type.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    kind: FeatureKind,
    grid: StateGrid,
    actions: ActionSet,
}

impl FeatureMap {
    pub fn new(kind: FeatureKind, grid: StateGrid, actions: ActionSet) -> Result<Self> {
        if kind == FeatureKind::Cyber2 && actions.actions() != [0, 1] {
            return Err(Error::InvalidModel("cyber2 features need the action set {0, 1}".into()));
        }
        Ok(Self { kind, grid, actions })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn grid(&self) -> StateGrid {
        self.grid
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FeatureKind::Cyber2 => 2,
            FeatureKind::ActionIndicator => self.actions.len() - 1,
            FeatureKind::StateActionIndicator => self.grid.len() * (self.actions.len() - 1),
        }
    }

    /// Writes `f(x, a)` into `out` for state index `x` and action index `a`.
    pub fn eval_into(&self, x: usize, a: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.kind {
            FeatureKind::Cyber2 => {
                if a == 1 {
                    let s = self.grid.point(x);
                    out[0] = s;
                    out[1] = 1.0 - s;
                }
            }
            FeatureKind::ActionIndicator => {
                if a > 0 {
                    out[a - 1] = 1.0;
                }
            }
            FeatureKind::StateActionIndicator => {
                if a > 0 {
                    out[x * (self.actions.len() - 1) + a - 1] = 1.0;
                }
            }
        }
    }

    pub fn eval(&self, x: usize, a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, a, &mut out);
        out
    }
}

/// Feature weights of a Boltzmann policy for one agent type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub theta: Vec<f64>,
    pub type_index: usize,
}

impl PolicyParams {
    pub fn new(theta: Vec<f64>, type_index: usize) -> Self {
        Self { theta, type_index }
    }

    pub fn zeros(dim: usize, type_index: usize) -> Self {
        Self { theta: vec![0.0; dim], type_index }
    }

    fn validate(&self, fmap: &FeatureMap) -> Result<()> {
        if self.theta.len() != fmap.dim() {
            return Err(Error::InvalidPolicyParams(format!(
                "expected {} weights, got {}",
                fmap.dim(),
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPolicyParams("non-finite weight".into()));
        }
        Ok(())
    }
}

fn logits(theta: &PolicyParams, fmap: &FeatureMap, x: usize) -> Result<Vec<f64>> {
    theta.validate(fmap)?;
    fmap.grid.check_index(x)?;
    let mut f = vec![0.0; fmap.dim()];
    Ok((0..fmap.actions.len())
        .map(|a| {
            fmap.eval_into(x, a, &mut f);
            f.iter().zip(&theta.theta).map(|(fi, ti)| fi * ti).sum()
        })
        .collect())
}

fn softmax(h: &[f64]) -> Vec<f64> {
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = h.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Action probabilities of the Boltzmann policy at state index `x`.
pub fn boltzmann_probs(theta: &PolicyParams, fmap: &FeatureMap, x: usize) -> Result<Vec<f64>> {
    Ok(softmax(&logits(theta, fmap, x)?))
}

/// `log pi(a | x)` computed with log-sum-exp.
pub fn log_policy(theta: &PolicyParams, fmap: &FeatureMap, x: usize, action: i64) -> Result<f64> {
    let a = fmap.actions.index_of(action)?;
    let h = logits(theta, fmap, x)?;
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + h.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(h[a] - lse)
}

/// Score function `grad_theta log pi(a | x)`.
pub fn grad_log_policy(theta: &PolicyParams, fmap: &FeatureMap, x: usize, action: i64) -> Result<Vec<f64>> {
    let a = fmap.actions.index_of(action)?;
    let probs = boltzmann_probs(theta, fmap, x)?;
    Ok(score_from_probs(fmap, x, a, &probs))
}

/// Score function given precomputed action probabilities at `x`.
pub(crate) fn score_from_probs(fmap: &FeatureMap, x: usize, a: usize, probs: &[f64]) -> Vec<f64> {
    let dim = fmap.dim();
    let mut grad = fmap.eval(x, a);
    let mut f = vec![0.0; dim];
    for (b, p) in probs.iter().enumerate() {
        fmap.eval_into(x, b, &mut f);
        for (g, fb) in grad.iter_mut().zip(&f) {
            *g -= p * fb;
        }
    }
    grad
}

/// Per-state action distributions over a fixed action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    pub actions: ActionSet,
    /// `rows[x][a]` is the probability of action index `a` at state index `x`.
    pub rows: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn new(actions: ActionSet, rows: Vec<Vec<f64>>) -> Result<Self> {
        for row in &rows {
            if row.len() != actions.len() {
                return Err(Error::LengthMismatch { expected: actions.len(), actual: row.len() });
            }
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (total - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidDistribution(format!("policy row {row:?} is not a distribution")));
            }
        }
        Ok(Self { actions, rows })
    }

    /// Deterministic policy choosing action index `choice[x]` at state `x`.
    pub fn deterministic(actions: ActionSet, choice: &[usize]) -> Self {
        let rows = choice
            .iter()
            .map(|&c| {
                let mut row = vec![0.0; actions.len()];
                row[c] = 1.0;
                row
            })
            .collect();
        Self { actions, rows }
    }

    pub fn from_boltzmann(theta: &PolicyParams, fmap: &FeatureMap) -> Result<Self> {
        let rows = (0..fmap.grid.len()).map(|x| boltzmann_probs(theta, fmap, x)).collect::<Result<_>>()?;
        Ok(Self { actions: fmap.actions.clone(), rows })
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.rows[x][a]
    }
}
