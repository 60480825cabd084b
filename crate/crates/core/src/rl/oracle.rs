//! Exact quantities for a Boltzmann policy on a fully known model. Test and
//! diagnostic use only; the learner never calls these.

use crate::envs::GameModel;
use crate::error::{Error, Result};
use crate::exact::FrozenMdp;
use crate::grid::PopulationDistribution;
use crate::policy::{score_from_probs, FeatureMap, PolicyParams, TabularPolicy};

/// Smallest `H` with `gamma^H * r_max / (1 - gamma) < 1e-8`.
pub fn default_horizon(gamma: f64, r_max: f64) -> usize {
    let scale = r_max / (1.0 - gamma);
    if scale < 1e-8 {
        return 0;
    }
    ((1e-8 / scale).ln() / gamma.ln()).floor() as usize + 1
}

fn frozen(model: &dyn GameModel, type_index: usize, zs: &[PopulationDistribution]) -> Result<FrozenMdp> {
    if !model.exposes_kernel() {
        return Err(Error::OracleRequiresFullModel);
    }
    FrozenMdp::new(model, type_index, zs)
}

/// `Q^pi(x, a)` for the Boltzmann policy `theta`, via a direct linear solve.
pub fn exact_q(
    model: &dyn GameModel,
    type_index: usize,
    theta: &PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
) -> Result<Vec<Vec<f64>>> {
    let mdp = frozen(model, type_index, zs)?;
    let policy = TabularPolicy::from_boltzmann(theta, fmap)?;
    let values = mdp.evaluate(&policy)?;
    Ok(mdp.backup(&values))
}

/// `J^j(theta) = sum_x z_j(x) V^pi(x)`.
pub fn exact_objective(
    model: &dyn GameModel,
    type_index: usize,
    theta: &PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
) -> Result<f64> {
    let mdp = frozen(model, type_index, zs)?;
    let policy = TabularPolicy::from_boltzmann(theta, fmap)?;
    let values = mdp.evaluate(&policy)?;
    Ok(zs[type_index].mass().iter().zip(&values).map(|(z, v)| z * v).sum())
}

/// Policy-gradient expansion of `grad J^j(theta)`:
///
/// ```text
/// sum_t gamma^t sum_y rho_t(y) sum_a pi(a | y) grad log pi(a | y) Q^pi(y, a)
/// ```
///
/// with `rho_0 = z_j`, `rho_{t+1} = rho_t P_pi`, truncated after `horizon`
/// steps (`None` picks [`default_horizon`]).
pub fn exact_gradient(
    model: &dyn GameModel,
    type_index: usize,
    theta: &PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
    horizon: Option<usize>,
) -> Result<Vec<f64>> {
    let mdp = frozen(model, type_index, zs)?;
    let gamma = mdp.gamma;
    let horizon = horizon.unwrap_or_else(|| default_horizon(gamma, model.reward_bound()));
    let policy = TabularPolicy::from_boltzmann(theta, fmap)?;
    let values = mdp.evaluate(&policy)?;
    let q = mdp.backup(&values);
    let chain = mdp.transition_under(&policy);

    // per-state contribution sum_a pi(a|y) grad log pi(a|y) Q(y, a)
    let local: Vec<Vec<f64>> = (0..mdp.num_states())
        .map(|y| {
            let probs = &policy.rows[y];
            let mut acc = vec![0.0; fmap.dim()];
            for (a, pa) in probs.iter().enumerate() {
                let score = score_from_probs(fmap, y, a, probs);
                for (g, s) in acc.iter_mut().zip(score) {
                    *g += pa * s * q[y][a];
                }
            }
            acc
        })
        .collect();

    let mut occupancy = vec![0.0; mdp.num_states()];
    let mut rho = zs[type_index].mass().to_vec();
    let mut discount = 1.0;
    for _ in 0..=horizon {
        for (o, r) in occupancy.iter_mut().zip(&rho) {
            *o += discount * r;
        }
        let mut next = vec![0.0; rho.len()];
        for (x, rx) in rho.iter().enumerate() {
            for (n, p) in next.iter_mut().zip(&chain[x]) {
                *n += rx * p;
            }
        }
        rho = next;
        discount *= gamma;
    }

    let mut grad = vec![0.0; fmap.dim()];
    for (o, l) in occupancy.iter().zip(&local) {
        for (g, v) in grad.iter_mut().zip(l) {
            *g += o * v;
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{catalog, TableModel};
    use crate::rl::SampleOnly;

    #[test]
    fn horizon_meets_truncation_bound() {
        let h = default_horizon(0.9, 1.0);
        assert!(0.9f64.powi(h as i32) * 10.0 < 1e-8);
        assert!(0.9f64.powi(h as i32 - 1) * 10.0 >= 1e-8);
        assert_eq!(default_horizon(0.9, 0.0), 0);
    }

    #[test]
    fn zero_reward_gradient_vanishes() {
        let model = TableModel::new(catalog::identity()).unwrap();
        let fmap = model.feature_map(0).unwrap();
        let theta = PolicyParams::new(vec![0.4, -1.0], 0);
        let zs = model.uniform_populations();
        let g = exact_gradient(&model, 0, &theta, &fmap, &zs, None).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sample_only_models_are_refused() {
        let model = SampleOnly(TableModel::new(catalog::two_state()).unwrap());
        let fmap = model.feature_map(0).unwrap();
        let theta = PolicyParams::zeros(fmap.dim(), 0);
        let zs = model.uniform_populations();
        assert_eq!(exact_gradient(&model, 0, &theta, &fmap, &zs, None), Err(Error::OracleRequiresFullModel));
    }
}
