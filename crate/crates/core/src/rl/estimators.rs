//! Random-horizon estimators.
//!
//! `est_q` draws `T ~ Geometric(1 - sqrt(gamma))`, so `P(T >= t) = gamma^(t/2)`,
//! and weights the reward at step `t` by `gamma^(t/2)`; the two factors
//! multiply to the discount `gamma^t`, which makes the estimate unbiased for
//! `Q^pi(x, a)`. The gradient sample rolls the policy forward for
//! `T' ~ Geometric(1 - gamma)` steps first, which samples states from the
//! normalised discounted occupancy measure.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::simulator::PopulationSimulator;
use crate::error::{Error, Result};
use crate::grid::{sample_index, PopulationDistribution};
use crate::policy::{boltzmann_probs, score_from_probs, FeatureMap, PolicyParams};

/// Step sizes `alpha_k = scale * k^(-a)` with `a` in `(1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepSchedule {
    pub a_exponent: f64,
    pub scale: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self { a_exponent: 0.7, scale: 1.0 }
    }
}

impl StepSchedule {
    pub fn new(a_exponent: f64) -> Result<Self> {
        let schedule = Self { a_exponent, scale: 1.0 };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_exponent > 0.5 && self.a_exponent < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "schedule.a_exponent = {} must lie in (0.5, 1)",
                self.a_exponent
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("schedule.scale = {} must be positive", self.scale)));
        }
        Ok(())
    }

    /// `alpha_k` for `k >= 1`.
    pub fn alpha(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(-self.a_exponent)
    }
}

fn sample_action<R: Rng + ?Sized>(theta: &PolicyParams, fmap: &FeatureMap, x: usize, rng: &mut R) -> Result<usize> {
    let probs = boltzmann_probs(theta, fmap, x)?;
    Ok(sample_index(&probs, rng.random()))
}

fn geometric<R: Rng + ?Sized>(success: f64, rng: &mut R) -> u64 {
    Geometric::new(success).expect("success probability in (0, 1]").sample(rng)
}

/// Unbiased random-horizon estimate of `Q^j(x0, a0)` under the Boltzmann policy `theta`.
///
/// `a0` is an action index into the type's action set.
#[allow(clippy::too_many_arguments)]
pub fn est_q<R: Rng + ?Sized>(
    sim: &PopulationSimulator<'_>,
    type_index: usize,
    x0: usize,
    a0: usize,
    theta: &PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
    rng: &mut R,
) -> Result<f64> {
    let gamma = sim.gamma().value();
    let root = gamma.sqrt();
    let horizon = geometric(1.0 - root, rng);
    rollout_q(sim, type_index, x0, a0, horizon, theta, fmap, zs, rng)
}

/// `sum_{t<T} gamma^(t/2) r_t + gamma^(T/2) r_T` along one trajectory of fixed length `T`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn rollout_q<R: Rng + ?Sized>(
    sim: &PopulationSimulator<'_>,
    type_index: usize,
    x0: usize,
    a0: usize,
    horizon: u64,
    theta: &PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
    rng: &mut R,
) -> Result<f64> {
    let root = sim.gamma().value().sqrt();
    let (mut x, mut a) = (x0, a0);
    let mut weight = 1.0;
    let mut q = 0.0;
    for _ in 0..horizon {
        let (next, r) = sim.sample_next(type_index, x, a, zs, rng);
        q += weight * r;
        weight *= root;
        x = next;
        a = sample_action(theta, fmap, x, rng)?;
    }
    Ok(q + weight * sim.reward(type_index, x, a, zs))
}

/// One draw of the score-function gradient estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    /// `Q_hat * grad log pi(a_T | x_T) / (1 - gamma)`.
    pub gradient: Vec<f64>,
    pub q_hat: f64,
    pub state: usize,
    pub action: usize,
}

/// Single-sample estimate of `grad J^j(theta)` with `J = E_{x ~ z_j}[V(x)]`.
pub fn gradient_estimate<R: Rng + ?Sized>(
    sim: &PopulationSimulator<'_>,
    type_index: usize,
    theta: &PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
    rng: &mut R,
) -> Result<GradientSample> {
    let gamma = sim.gamma().value();
    let mut x = zs[type_index].sample_index(rng.random());
    let horizon = geometric(1.0 - gamma, rng);
    let mut a = sample_action(theta, fmap, x, rng)?;
    for _ in 0..horizon {
        let (next, _) = sim.sample_next(type_index, x, a, zs, rng);
        x = next;
        a = sample_action(theta, fmap, x, rng)?;
    }
    let q_hat = est_q(sim, type_index, x, a, theta, fmap, zs, rng)?;
    let probs = boltzmann_probs(theta, fmap, x)?;
    let scale = q_hat / (1.0 - gamma);
    let gradient = score_from_probs(fmap, x, a, &probs).into_iter().map(|g| g * scale).collect();
    Ok(GradientSample { gradient, q_hat, state: x, action: a })
}

/// `theta_{k+1} = theta_k + alpha_k * Q_hat * grad log pi(a_T | x_T) / (1 - gamma)`.
#[allow(clippy::too_many_arguments)]
pub fn pg_step<R: Rng + ?Sized>(
    sim: &PopulationSimulator<'_>,
    type_index: usize,
    theta: &PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
    k: usize,
    schedule: &StepSchedule,
    rng: &mut R,
) -> Result<(PolicyParams, GradientSample)> {
    if k == 0 {
        return Err(Error::InvalidConfig("policy-gradient iterations start at k = 1".into()));
    }
    let sample = gradient_estimate(sim, type_index, theta, fmap, zs, rng)?;
    let alpha = schedule.alpha(k);
    let next = theta.theta.iter().zip(&sample.gradient).map(|(t, g)| t + alpha * g).collect();
    Ok((PolicyParams::new(next, theta.type_index), sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{catalog, GameModel, TableModel};
    use crate::rl::rng::{substream, Stream};

    fn zero_reward_model() -> TableModel {
        let mut spec = catalog::two_state();
        for t in &mut spec.types {
            for r in &mut t.reward {
                r.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        TableModel::new(spec).unwrap()
    }

    #[test]
    fn schedule_bounds() {
        assert!(StepSchedule::new(0.5).is_err());
        assert!(StepSchedule::new(1.0).is_err());
        let s = StepSchedule::new(0.7).unwrap();
        assert_eq!(s.alpha(1), 1.0);
        assert!((s.alpha(10) - 10f64.powf(-0.7)).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_returns_immediate_reward() {
        let model = TableModel::new(catalog::two_state()).unwrap();
        let sim = PopulationSimulator::new(&model);
        let fmap = model.feature_map(0).unwrap();
        let theta = PolicyParams::zeros(fmap.dim(), 0);
        let zs = model.uniform_populations();
        let mut rng = substream(1, Stream::Custom(0));
        let q = rollout_q(&sim, 0, 1, 1, 0, &theta, &fmap, &zs, &mut rng).unwrap();
        assert_eq!(q, 0.6);
    }

    #[test]
    fn zero_reward_gives_zero_estimates_and_no_update() {
        let model = zero_reward_model();
        let sim = PopulationSimulator::new(&model);
        let fmap = model.feature_map(1).unwrap();
        let theta = PolicyParams::new(vec![0.3, -0.2], 1);
        let zs = model.uniform_populations();
        let mut rng = substream(2, Stream::Custom(0));
        for k in 1..200 {
            assert_eq!(est_q(&sim, 1, 0, 1, &theta, &fmap, &zs, &mut rng).unwrap(), 0.0);
            let (next, sample) = pg_step(&sim, 1, &theta, &fmap, &zs, k, &StepSchedule::default(), &mut rng).unwrap();
            assert_eq!(sample.q_hat, 0.0);
            assert_eq!(next, theta);
        }
    }

    #[test]
    fn pg_step_rejects_k_zero() {
        let model = TableModel::new(catalog::two_state()).unwrap();
        let sim = PopulationSimulator::new(&model);
        let fmap = model.feature_map(0).unwrap();
        let theta = PolicyParams::zeros(fmap.dim(), 0);
        let zs = model.uniform_populations();
        let mut rng = substream(3, Stream::Custom(0));
        assert!(pg_step(&sim, 0, &theta, &fmap, &zs, 0, &StepSchedule::default(), &mut rng).is_err());
    }
}
