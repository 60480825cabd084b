//! Defender/attacker cyber-attack game.
//!
//! Type 0 is the defender (state = vulnerability), type 1 the attacker
//! (state = weakness). Action 0 resets the state to 0 at a cost `lambda`;
//! action 1 lets the state drift up by an increment drawn uniformly from
//! `{0, 1/n, ..., 1 - x}`. The two types interact only through the
//! mean-gap term of the reward.

use serde::{Deserialize, Serialize};

use super::GameModel;
use crate::error::{Error, Result};
use crate::grid::{ActionSet, DiscountFactor, PopulationDistribution, StateGrid};
use crate::policy::FeatureKind;

pub const DEFENDER: usize = 0;
pub const ATTACKER: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyberParams {
    pub n: usize,
    pub g1: f64,
    pub g2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
}

impl Default for CyberParams {
    fn default() -> Self {
        Self { n: 10, g1: 0.2, g2: 0.1, lambda1: 0.5, lambda2: 0.5, gamma: 0.9 }
    }
}

#[derive(Debug, Clone)]
pub struct CyberModel {
    params: CyberParams,
    grid: StateGrid,
    actions: ActionSet,
    gamma: DiscountFactor,
}

impl CyberModel {
    pub fn new(params: CyberParams) -> Result<Self> {
        let coeffs = [params.g1, params.g2, params.lambda1, params.lambda2];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidConfig("cyber coefficients must be finite and non-negative".into()));
        }
        let grid = StateGrid::new(params.n)?;
        let gamma = DiscountFactor::new(params.gamma)?;
        Ok(Self { params, grid, actions: ActionSet::binary(), gamma })
    }

    pub fn params(&self) -> &CyberParams {
        &self.params
    }
}

impl GameModel for CyberModel {
    fn name(&self) -> &str {
        "cyber"
    }

    fn num_types(&self) -> usize {
        2
    }

    fn grid(&self, _type_index: usize) -> StateGrid {
        self.grid
    }

    fn actions(&self, _type_index: usize) -> &ActionSet {
        &self.actions
    }

    fn gamma(&self) -> DiscountFactor {
        self.gamma
    }

    fn reward_bound(&self) -> f64 {
        self.params.g1 + self.params.g2 + self.params.lambda1.max(self.params.lambda2)
    }

    fn transition(&self, _type_index: usize, x: usize, a: usize, _zs: &[PopulationDistribution]) -> Vec<f64> {
        let len = self.grid.len();
        let mut row = vec![0.0; len];
        if a == 0 {
            row[0] = 1.0;
        } else {
            let p = 1.0 / (len - x) as f64;
            row[x..].iter_mut().for_each(|r| *r = p);
        }
        row
    }

    fn sample_transition(&self, _type_index: usize, x: usize, a: usize, _zs: &[PopulationDistribution], u: f64) -> usize {
        if a == 0 {
            return 0;
        }
        let width = self.grid.len() - x;
        x + ((u * width as f64) as usize).min(width - 1)
    }

    fn reward(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution]) -> f64 {
        let state = self.grid.point(x);
        let (own, other, lambda) = match type_index {
            DEFENDER => (&zs[DEFENDER], &zs[ATTACKER], self.params.lambda1),
            _ => (&zs[ATTACKER], &zs[DEFENDER], self.params.lambda2),
        };
        let gap = (own.mean() - other.mean()).max(0.0);
        let action_cost = if a == 0 { lambda } else { 0.0 };
        -self.params.g1 * state - self.params.g2 * state * gap - action_cost
    }

    fn feature_kind(&self, _type_index: usize) -> FeatureKind {
        FeatureKind::Cyber2
    }
}
