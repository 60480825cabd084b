//! Empirical contraction diagnostics for the composed map.
//!
//! `c1` bounds the kernel entries, `c2` is their Lipschitz constant in the
//! joint W1 metric, `d1` the Lipschitz constant of the best-response maps.
//! With `diam(X_j) = 1`:
//!
//! ```text
//! d2 = max_j diam(X_j) * max_j |X_j| * c1 / min_j d_min(A_j)
//! d3 = max_j diam(X_j) * c2 / 2
//! ```
//!
//! and the map is reported as contracting when `d1 * d2 + d3 < 1`.

use serde::{Deserialize, Serialize};

use super::fixed_point::{gamma_map, ExactConfig};
use crate::envs::GameModel;
use crate::error::{Error, Result};
use crate::grid::PopulationDistribution;
use crate::metrics::{joint_w1, tabular_policy_distance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Estimated Lipschitz constant of the best-response maps (sampled).
    pub d1_hat: f64,
    pub d2: f64,
    pub d3: f64,
    /// Largest sampled kernel entry.
    pub c1_hat: f64,
    /// Largest sampled ratio `|tau(z) - tau(z')| / joint_w1(z, z')`.
    pub c2_hat: f64,
    pub contracts: bool,
    pub pairs: usize,
}

impl ContractionReport {
    /// `d1_hat * d2 + d3`.
    pub fn modulus(&self) -> f64 {
        self.d1_hat * self.d2 + self.d3
    }
}

/// Estimates the contraction constants from all pairs of `zsamples`.
pub fn lemma1_constants(
    model: &dyn GameModel,
    zsamples: &[Vec<PopulationDistribution>],
    config: &ExactConfig,
) -> Result<ContractionReport> {
    if zsamples.is_empty() {
        return Err(Error::DegenerateSample("no population samples".into()));
    }
    for zs in zsamples {
        model.check_populations(zs)?;
    }
    if !model.exposes_kernel() {
        return Err(Error::OracleRequiresFullModel);
    }
    let types = model.num_types();
    // kernels[s][j][x][a] and best responses per sample
    let kernels: Vec<Vec<Vec<Vec<Vec<f64>>>>> = zsamples
        .iter()
        .map(|zs| {
            (0..types)
                .map(|j| {
                    (0..model.grid(j).len())
                        .map(|x| (0..model.actions(j).len()).map(|a| model.transition(j, x, a, zs)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let responses = zsamples.iter().map(|zs| gamma_map(model, zs, config)).collect::<Result<Vec<_>>>()?;

    let c1_hat = kernels.iter().flatten().flatten().flatten().flatten().copied().fold(0.0, f64::max);

    let mut c2_hat: f64 = 0.0;
    let mut d1_hat: f64 = 0.0;
    let mut pairs = 0;
    for s in 0..zsamples.len() {
        for t in s + 1..zsamples.len() {
            let dist = joint_w1(&zsamples[s], &zsamples[t])?;
            if dist <= 0.0 {
                continue;
            }
            pairs += 1;
            let kernel_gap = kernels[s]
                .iter()
                .flatten()
                .flatten()
                .flatten()
                .zip(kernels[t].iter().flatten().flatten().flatten())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            c2_hat = c2_hat.max(kernel_gap / dist);
            for j in 0..types {
                let gap = tabular_policy_distance(&responses[s].policies[j], &responses[t].policies[j])?;
                d1_hat = d1_hat.max(gap / dist);
            }
        }
    }
    if pairs == 0 {
        return Err(Error::DegenerateSample("all sampled population pairs are identical".into()));
    }

    let diam = (0..types).map(|j| model.grid(j).diameter()).fold(0.0, f64::max);
    let max_states = (0..types).map(|j| model.grid(j).len()).max().unwrap_or(0) as f64;
    let min_gap = (0..types).filter_map(|j| model.actions(j).min_gap()).reduce(f64::min);
    // a single-action type has no policy freedom, so it cannot amplify policy gaps
    let d2 = min_gap.map_or(0.0, |g| diam * max_states * c1_hat / g);
    let d3 = diam * c2_hat / 2.0;
    let contracts = d1_hat * d2 + d3 < 1.0;
    Ok(ContractionReport { d1_hat, d2, d3, c1_hat, c2_hat, contracts, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{catalog, CyberModel, CyberParams, TableModel};

    fn cyber_samples(model: &dyn GameModel) -> Vec<Vec<PopulationDistribution>> {
        let grid = model.grid(0);
        (0..4)
            .map(|k| {
                vec![
                    PopulationDistribution::point_mass(grid, k).unwrap(),
                    PopulationDistribution::point_mass(grid, 2 * k).unwrap(),
                ]
            })
            .collect()
    }

    #[test]
    fn population_free_kernel_has_zero_c2() {
        let model = CyberModel::new(CyberParams::default()).unwrap();
        let report = lemma1_constants(&model, &cyber_samples(&model), &ExactConfig::default()).unwrap();
        assert_eq!(report.c2_hat, 0.0);
        assert_eq!(report.d3, 0.0);
        // the reset action is a point mass
        assert_eq!(report.c1_hat, 1.0);
        assert_eq!(report.d2, 11.0);
    }

    #[test]
    fn deterministic_kernel_has_unit_c1() {
        let model = TableModel::new(catalog::cycle()).unwrap();
        let grid = model.grid(0);
        let samples = vec![
            vec![PopulationDistribution::point_mass(grid, 0).unwrap(); 2],
            vec![PopulationDistribution::point_mass(grid, 1).unwrap(); 2],
        ];
        let report = lemma1_constants(&model, &samples, &ExactConfig::default()).unwrap();
        assert_eq!(report.c1_hat, 1.0);
        assert_eq!(report.d2, 0.0);
        assert!(report.contracts);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let model = TableModel::new(catalog::identity()).unwrap();
        let zs = model.uniform_populations();
        let err = lemma1_constants(&model, &[zs.clone(), zs], &ExactConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSample(_)));
        assert!(lemma1_constants(&model, &[], &ExactConfig::default()).is_err());
    }
}
