//! Wasserstein-1 distances on the line.

use crate::error::{Error, Result};
use crate::grid::{ActionSet, PopulationDistribution};
use crate::policy::{FeatureMap, PolicyParams, TabularPolicy};

/// W1 between two distributions on the same grid, `(1/n) * sum_k |F_p(k) - F_q(k)|`.
pub fn w1_distance(p: &PopulationDistribution, q: &PopulationDistribution) -> Result<f64> {
    if p.grid() != q.grid() {
        return Err(Error::GridMismatch { left: p.grid().subdivisions(), right: q.grid().subdivisions() });
    }
    let mut cp = 0.0;
    let mut cq = 0.0;
    let mut total = 0.0;
    // the last CDF entry is 1 for both and contributes nothing
    for (a, b) in p.mass().iter().zip(q.mass()).take(p.len() - 1) {
        cp += a;
        cq += b;
        total += (cp - cq).abs();
    }
    Ok(total * p.grid().spacing())
}

/// Sum of per-type W1 distances.
pub fn joint_w1(zs: &[PopulationDistribution], other: &[PopulationDistribution]) -> Result<f64> {
    if zs.len() != other.len() {
        return Err(Error::LengthMismatch { expected: zs.len(), actual: other.len() });
    }
    zs.iter().zip(other).map(|(p, q)| w1_distance(p, q)).sum()
}

/// W1 between two distributions over an action set, ground metric `|a - a'|`.
pub fn action_w1(actions: &ActionSet, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != actions.len() || q.len() != actions.len() {
        return Err(Error::LengthMismatch { expected: actions.len(), actual: p.len().min(q.len()) });
    }
    let mut order: Vec<usize> = (0..actions.len()).collect();
    order.sort_by_key(|&i| actions.action(i));
    let mut diff = 0.0;
    let mut total = 0.0;
    for w in order.windows(2) {
        diff += p[w[0]] - q[w[0]];
        total += diff.abs() * (actions.action(w[1]) - actions.action(w[0])) as f64;
    }
    Ok(total)
}

/// `sup_x W1(pi(x), pi'(x))` for two tabular policies.
pub fn tabular_policy_distance(pi: &TabularPolicy, other: &TabularPolicy) -> Result<f64> {
    if pi.actions != other.actions {
        return Err(Error::InvalidModel("policies use different action sets".into()));
    }
    if pi.num_states() != other.num_states() {
        return Err(Error::LengthMismatch { expected: pi.num_states(), actual: other.num_states() });
    }
    pi.rows
        .iter()
        .zip(&other.rows)
        .map(|(p, q)| action_w1(&pi.actions, p, q))
        .try_fold(0.0_f64, |acc, d| d.map(|d| acc.max(d)))
}

/// `sup_x W1(pi(x), pi'(x))` for two Boltzmann policies of the same type.
pub fn policy_distance(
    theta: &PolicyParams,
    fmap: &FeatureMap,
    other: &PolicyParams,
    other_fmap: &FeatureMap,
) -> Result<f64> {
    if fmap.grid() != other_fmap.grid() {
        return Err(Error::GridMismatch {
            left: fmap.grid().subdivisions(),
            right: other_fmap.grid().subdivisions(),
        });
    }
    if theta.type_index != other.type_index {
        return Err(Error::InvalidPolicyParams("policies govern different agent types".into()));
    }
    let pi = TabularPolicy::from_boltzmann(theta, fmap)?;
    let pi2 = TabularPolicy::from_boltzmann(other, other_fmap)?;
    tabular_policy_distance(&pi, &pi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StateGrid;
    use crate::policy::FeatureKind;

    fn grid(n: usize) -> StateGrid {
        StateGrid::new(n).unwrap()
    }

    #[test]
    fn w1_examples() {
        let g = grid(4);
        let p = PopulationDistribution::uniform(g);
        assert_eq!(w1_distance(&p, &p).unwrap(), 0.0);
        let lo = PopulationDistribution::point_mass(g, 0).unwrap();
        let hi = PopulationDistribution::point_mass(g, 4).unwrap();
        assert!((w1_distance(&lo, &hi).unwrap() - 1.0).abs() < 1e-15);

        let g2 = grid(2);
        let p = PopulationDistribution::new(g2, vec![1.0, 0.0, 0.0]).unwrap();
        let q = PopulationDistribution::new(g2, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(w1_distance(&p, &q).unwrap(), 0.5);
        assert_eq!(w1_distance(&q, &p).unwrap(), 0.5);
    }

    #[test]
    fn w1_rejects_grid_mismatch() {
        let p = PopulationDistribution::uniform(grid(2));
        let q = PopulationDistribution::uniform(grid(3));
        assert_eq!(w1_distance(&p, &q), Err(Error::GridMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn joint_w1_is_additive() {
        let g = grid(2);
        let a = PopulationDistribution::new(g, vec![1.0, 0.0, 0.0]).unwrap();
        let b = PopulationDistribution::new(g, vec![0.0, 1.0, 0.0]).unwrap();
        let c = PopulationDistribution::new(g, vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(joint_w1(&[a.clone(), c.clone()], &[a.clone(), c.clone()]).unwrap(), 0.0);
        assert_eq!(joint_w1(&[a.clone(), c.clone()], &[b.clone(), c.clone()]).unwrap(), 0.5);
        assert_eq!(joint_w1(&[a.clone(), a.clone()], &[b.clone(), c.clone()]).unwrap(), 0.75);
        assert!(matches!(joint_w1(&[a.clone()], &[a, b]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn binary_policy_distance_is_max_probability_gap() {
        let fmap = FeatureMap::new(FeatureKind::Cyber2, grid(10), ActionSet::binary()).unwrap();
        let t1 = PolicyParams::new(vec![1.0, -2.0], 0);
        let t2 = PolicyParams::new(vec![-0.5, 0.3], 0);
        let d = policy_distance(&t1, &fmap, &t2, &fmap).unwrap();
        let p1 = TabularPolicy::from_boltzmann(&t1, &fmap).unwrap();
        let p2 = TabularPolicy::from_boltzmann(&t2, &fmap).unwrap();
        let expected = (0..11).map(|x| (p1.prob(x, 1) - p2.prob(x, 1)).abs()).fold(0.0, f64::max);
        assert!((d - expected).abs() < 1e-15);
        assert_eq!(policy_distance(&t1, &fmap, &t1, &fmap).unwrap(), 0.0);
    }

    #[test]
    fn opposite_deterministic_policies_are_one_apart() {
        let set = ActionSet::binary();
        let all0 = TabularPolicy::deterministic(set.clone(), &[0; 5]);
        let all1 = TabularPolicy::deterministic(set, &[1; 5]);
        assert_eq!(tabular_policy_distance(&all0, &all1).unwrap(), 1.0);
    }

    #[test]
    fn action_w1_uses_action_gaps() {
        let set = ActionSet::new(vec![3, 0]).unwrap();
        assert_eq!(action_w1(&set, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 3.0);
    }
}
