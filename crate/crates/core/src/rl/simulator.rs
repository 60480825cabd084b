use rand::Rng;

use crate::envs::GameModel;
use crate::error::Result;
use crate::grid::{ActionSet, DiscountFactor, PopulationDistribution, StateGrid};
use crate::policy::{FeatureKind, FeatureMap};

/// Sampling-only access to a game: next states and rewards, no kernel tables.
///
/// State spaces, action sets, the discount factor and the policy feature
/// class are public knowledge; transition probabilities are not.
#[derive(Clone, Copy)]
pub struct PopulationSimulator<'a> {
    model: &'a dyn GameModel,
}

impl<'a> PopulationSimulator<'a> {
    pub fn new(model: &'a dyn GameModel) -> Self {
        Self { model }
    }

    /// Samples `x' ~ tau^j(. | x, a, z)` and returns it with `r^j(x, a, z)`.
    pub fn sample_next<R: Rng + ?Sized>(
        &self,
        type_index: usize,
        x: usize,
        a: usize,
        zs: &[PopulationDistribution],
        rng: &mut R,
    ) -> (usize, f64) {
        let u: f64 = rng.random();
        let next = self.model.sample_transition(type_index, x, a, zs, u);
        (next, self.model.reward(type_index, x, a, zs))
    }

    /// Observed reward of taking action `a` in state `x`.
    pub fn reward(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution]) -> f64 {
        self.model.reward(type_index, x, a, zs)
    }

    pub fn num_types(&self) -> usize {
        self.model.num_types()
    }

    pub fn grid(&self, type_index: usize) -> StateGrid {
        self.model.grid(type_index)
    }

    pub fn actions(&self, type_index: usize) -> &ActionSet {
        self.model.actions(type_index)
    }

    pub fn gamma(&self) -> DiscountFactor {
        self.model.gamma()
    }

    pub fn feature_map(&self, type_index: usize) -> Result<FeatureMap> {
        self.model.feature_map(type_index)
    }

    pub fn check_populations(&self, zs: &[PopulationDistribution]) -> Result<()> {
        self.model.check_populations(zs)
    }
}

/// Wraps a model so that oracles refuse to read its kernel.
pub struct SampleOnly<M>(pub M);

impl<M: GameModel> GameModel for SampleOnly<M> {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn num_types(&self) -> usize {
        self.0.num_types()
    }
    fn grid(&self, type_index: usize) -> StateGrid {
        self.0.grid(type_index)
    }
    fn actions(&self, type_index: usize) -> &ActionSet {
        self.0.actions(type_index)
    }
    fn gamma(&self) -> DiscountFactor {
        self.0.gamma()
    }
    fn reward_bound(&self) -> f64 {
        self.0.reward_bound()
    }
    fn transition(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution]) -> Vec<f64> {
        self.0.transition(type_index, x, a, zs)
    }
    fn reward(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution]) -> f64 {
        self.0.reward(type_index, x, a, zs)
    }
    fn feature_kind(&self, type_index: usize) -> FeatureKind {
        self.0.feature_kind(type_index)
    }
    fn sample_transition(&self, type_index: usize, x: usize, a: usize, zs: &[PopulationDistribution], u: f64) -> usize {
        self.0.sample_transition(type_index, x, a, zs, u)
    }
    fn exposes_kernel(&self) -> bool {
        false
    }
}
