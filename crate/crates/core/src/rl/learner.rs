//! Outer population loop of the random-horizon policy-gradient learner.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::{pg_step, StepSchedule};
use super::rng::{substream, Stream};
use super::simulator::PopulationSimulator;
use crate::error::{Error, Result};
use crate::grid::{sample_index, PopulationDistribution};
use crate::metrics::joint_w1;
use crate::policy::{FeatureMap, PolicyParams, TabularPolicy};
use crate::profile::{EquilibriumProfile, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub seed: u64,
    /// Simulated agents per type for the population update. A single entry applies to every type.
    pub agents: Vec<usize>,
    /// Inner loop stops after `inner_patience` consecutive steps with `|theta_{k+1} - theta_k| < inner_tol`.
    pub inner_tol: f64,
    pub inner_patience: usize,
    pub max_inner: usize,
    /// Outer loop stops after `outer_patience` consecutive updates with joint W1 below `outer_tol`.
    pub outer_tol: f64,
    pub outer_patience: usize,
    pub max_outer: usize,
    pub schedule: StepSchedule,
    /// Carry policy weights across outer iterations instead of resetting them to zero.
    pub warm_start: bool,
    /// Population damping `z <- (1 - beta) z' + beta z`, `beta` in `[0, 1)`.
    pub damping: f64,
    /// Record every `trace_every`-th inner step (the last step is always recorded).
    pub trace_every: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            agents: vec![100],
            inner_tol: 1e-3,
            inner_patience: 200,
            max_inner: 100_000,
            outer_tol: 0.05,
            outer_patience: 1,
            max_outer: 50,
            schedule: StepSchedule::default(),
            warm_start: false,
            damping: 0.0,
            trace_every: 1000,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self, types: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.agents.is_empty() || self.agents.contains(&0) {
            return bad("learner.agents must be positive");
        }
        if self.agents.len() != 1 && self.agents.len() != types {
            return Err(Error::InvalidConfig(format!(
                "learner.agents needs 1 or {types} entries, got {}",
                self.agents.len()
            )));
        }
        if !(self.inner_tol > 0.0) {
            return bad("learner.inner_tol must be positive");
        }
        if !(self.outer_tol > 0.0) {
            return bad("learner.outer_tol must be positive");
        }
        for (key, value) in [
            ("inner_patience", self.inner_patience),
            ("outer_patience", self.outer_patience),
            ("max_inner", self.max_inner),
            ("max_outer", self.max_outer),
        ] {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("learner.{key} must be positive")));
            }
        }
        if self.trace_every == 0 {
            return bad("learner.trace_every must be positive");
        }
        if !(0.0..1.0).contains(&self.damping) {
            return bad("learner.damping must lie in [0, 1)");
        }
        self.schedule.validate()
    }

    pub fn agents_for(&self, type_index: usize) -> usize {
        if self.agents.len() == 1 {
            self.agents[0]
        } else {
            self.agents[type_index]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracePhase {
    Inner,
    Outer,
}

/// One learner trace record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlTraceRow {
    pub phase: TracePhase,
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub type_index: usize,
    pub theta: Vec<f64>,
    /// Q estimate of the recorded step (inner rows only).
    pub q_hat: Option<f64>,
    /// Joint W1 between consecutive populations (outer rows only).
    pub residual: Option<f64>,
    /// Mean state of every type's current population.
    pub means: Vec<f64>,
}

/// Draws `N_j` agents from each `z_j`, applies one action and one transition,
/// and returns the empirical next-state distributions.
pub fn empirical_population_update(
    sim: &PopulationSimulator<'_>,
    policies: &[(PolicyParams, FeatureMap)],
    zs: &[PopulationDistribution],
    agents: &[usize],
    seed: u64,
    outer_iter: usize,
) -> Result<Vec<PopulationDistribution>> {
    sim.check_populations(zs)?;
    if policies.len() != zs.len() || agents.len() != zs.len() {
        return Err(Error::LengthMismatch { expected: zs.len(), actual: policies.len().min(agents.len()) });
    }
    (0..zs.len())
        .map(|j| {
            let (theta, fmap) = &policies[j];
            let table = TabularPolicy::from_boltzmann(theta, fmap)?;
            let grid = sim.grid(j);
            let n = agents[j];
            if n == 0 {
                return Err(Error::InvalidConfig("agent counts must be positive".into()));
            }
            let counts = (0..n)
                .into_par_iter()
                .map(|l| {
                    let mut rng =
                        substream(seed, Stream::Agent { outer: outer_iter as u64, type_index: j as u64, agent: l as u64 });
                    let x = zs[j].sample_index(rng.random());
                    let a = sample_index(&table.rows[x], rng.random());
                    sim.sample_next(j, x, a, zs, &mut rng).0
                })
                .fold(
                    || vec![0usize; grid.len()],
                    |mut acc, x| {
                        acc[x] += 1;
                        acc
                    },
                )
                .reduce(
                    || vec![0usize; grid.len()],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
            PopulationDistribution::from_weights(grid, counts.into_iter().map(|c| c as f64 / n as f64).collect())
        })
        .collect()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct InnerResult {
    theta: PolicyParams,
    rows: Vec<RlTraceRow>,
}

fn inner_loop(
    sim: &PopulationSimulator<'_>,
    type_index: usize,
    start: PolicyParams,
    fmap: &FeatureMap,
    zs: &[PopulationDistribution],
    outer_iter: usize,
    config: &LearnerConfig,
) -> Result<InnerResult> {
    let mut rng = substream(config.seed, Stream::Inner { outer: outer_iter as u64, type_index: type_index as u64 });
    let means: Vec<f64> = zs.iter().map(|z| z.mean()).collect();
    let mut theta = start;
    let mut streak = 0;
    let mut rows = Vec::new();
    for k in 1..=config.max_inner {
        let (next, sample) = pg_step(sim, type_index, &theta, fmap, zs, k, &config.schedule, &mut rng)?;
        let step = norm_diff(&next.theta, &theta.theta);
        theta = next;
        streak = if step < config.inner_tol { streak + 1 } else { 0 };
        let done = streak >= config.inner_patience || k == config.max_inner;
        if k % config.trace_every == 0 || done {
            rows.push(RlTraceRow {
                phase: TracePhase::Inner,
                outer_iter,
                inner_iter: k,
                type_index,
                theta: theta.theta.clone(),
                q_hat: Some(sample.q_hat),
                residual: None,
                means: means.clone(),
            });
        }
        if done {
            break;
        }
    }
    Ok(InnerResult { theta, rows })
}

/// Random-horizon policy gradient for a stationary multi-type equilibrium.
///
/// Populations start uniform. Each outer iteration trains every type's
/// Boltzmann policy against the frozen populations, then replaces the
/// populations by the empirical next-state distribution of simulated agents.
pub fn rhpg_mmfe(
    sim: &PopulationSimulator<'_>,
    config: &LearnerConfig,
) -> Result<(EquilibriumProfile, Vec<RlTraceRow>)> {
    let types = sim.num_types();
    config.validate(types)?;
    let fmaps = (0..types).map(|j| sim.feature_map(j)).collect::<Result<Vec<_>>>()?;
    let agents: Vec<usize> = (0..types).map(|j| config.agents_for(j)).collect();
    let mut zs: Vec<PopulationDistribution> = (0..types).map(|j| PopulationDistribution::uniform(sim.grid(j))).collect();
    let mut thetas: Vec<PolicyParams> = fmaps.iter().enumerate().map(|(j, f)| PolicyParams::zeros(f.dim(), j)).collect();
    let mut trace = Vec::new();
    let mut streak = 0;
    let mut residual = f64::INFINITY;
    let mut status = Status::CapExhausted;
    let mut iterations = 0;

    for m in 0..config.max_outer {
        let starts: Vec<PolicyParams> = if config.warm_start {
            thetas.clone()
        } else {
            fmaps.iter().enumerate().map(|(j, f)| PolicyParams::zeros(f.dim(), j)).collect()
        };
        let results = (0..types)
            .into_par_iter()
            .map(|j| inner_loop(sim, j, starts[j].clone(), &fmaps[j], &zs, m, config))
            .collect::<Result<Vec<_>>>()?;
        thetas = results.iter().map(|r| r.theta.clone()).collect();
        trace.extend(results.into_iter().flat_map(|r| r.rows));

        let policies: Vec<(PolicyParams, FeatureMap)> = thetas.iter().cloned().zip(fmaps.iter().cloned()).collect();
        let mut next = empirical_population_update(sim, &policies, &zs, &agents, config.seed, m)?;
        if config.damping > 0.0 {
            next = next.iter().zip(&zs).map(|(new, old)| new.mix(old, config.damping)).collect::<Result<_>>()?;
        }
        residual = joint_w1(&next, &zs)?;
        zs = next;
        iterations = m + 1;
        let means: Vec<f64> = zs.iter().map(|z| z.mean()).collect();
        for (j, theta) in thetas.iter().enumerate() {
            trace.push(RlTraceRow {
                phase: TracePhase::Outer,
                outer_iter: m,
                inner_iter: 0,
                type_index: j,
                theta: theta.theta.clone(),
                q_hat: None,
                residual: Some(residual),
                means: means.clone(),
            });
        }
        streak = if residual < config.outer_tol { streak + 1 } else { 0 };
        if streak >= config.outer_patience {
            status = Status::Converged;
            break;
        }
    }

    let policies = thetas
        .iter()
        .zip(&fmaps)
        .map(|(t, f)| TabularPolicy::from_boltzmann(t, f))
        .collect::<Result<Vec<_>>>()?;
    let profile = EquilibriumProfile { policies, params: Some(thetas), populations: zs, residual, iterations, status };
    Ok((profile, trace))
}
