use std::path::Path;

use mmfe_core::joint_w1;
use serde::Serialize;

use crate::artifacts::RunArtifacts;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPair {
    pub m: usize,
    pub first: Option<f64>,
    pub second: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Joint W1 between the final populations.
    pub population_w1: f64,
    /// Largest absolute difference between the two policy tables.
    pub policy_sup_norm: f64,
    /// Per type, the first state whose most likely action differs from that of state 0.
    pub thresholds: Vec<(Option<usize>, Option<usize>)>,
    pub residuals: Vec<ResidualPair>,
}

/// First state whose greedy action differs from the greedy action at state 0.
pub fn switch_state(rows: &[Vec<f64>]) -> Option<usize> {
    let argmax = |row: &Vec<f64>| {
        row.iter().enumerate().fold(0, |best, (i, p)| if *p > row[best] + 1e-12 { i } else { best })
    };
    let first = argmax(rows.first()?);
    rows.iter().position(|r| argmax(r) != first)
}

pub fn compare(first: &Path, second: &Path) -> Result<Comparison, CliError> {
    let a = RunArtifacts::load(first)?;
    let b = RunArtifacts::load(second)?;
    let population_w1 = joint_w1(&a.populations, &b.populations).map_err(|e| CliError::Input(format!("populations: {e}")))?;
    if a.policies.len() != b.policies.len() {
        return Err(CliError::Input(format!(
            "runs have {} and {} agent types",
            a.policies.len(),
            b.policies.len()
        )));
    }
    let mut policy_sup_norm: f64 = 0.0;
    let mut thresholds = Vec::new();
    for (j, ((la, ra), (lb, rb))) in a.policies.iter().zip(&b.policies).enumerate() {
        if la != lb || ra.len() != rb.len() {
            return Err(CliError::Input(format!("type {j}: policy tables cover different states or actions")));
        }
        for (x, y) in ra.iter().zip(rb) {
            for (p, q) in x.iter().zip(y) {
                policy_sup_norm = policy_sup_norm.max((p - q).abs());
            }
        }
        thresholds.push((switch_state(ra), switch_state(rb)));
    }
    let ra = a.residuals()?;
    let rb = b.residuals()?;
    let mut ms: Vec<usize> = ra.iter().chain(&rb).map(|(m, _)| *m).collect();
    ms.sort_unstable();
    ms.dedup();
    let lookup = |rs: &[(usize, f64)], m: usize| rs.iter().find(|(k, _)| *k == m).map(|(_, r)| *r);
    let residuals = ms.into_iter().map(|m| ResidualPair { m, first: lookup(&ra, m), second: lookup(&rb, m) }).collect();
    Ok(Comparison { population_w1, policy_sup_norm, thresholds, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_state_finds_first_change() {
        let rows = vec![vec![0.1, 0.9], vec![0.2, 0.8], vec![0.7, 0.3], vec![0.9, 0.1]];
        assert_eq!(switch_state(&rows), Some(2));
        assert_eq!(switch_state(&rows[..2]), None);
    }
}
