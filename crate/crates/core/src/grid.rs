//! State grids, population distributions, action sets and the discount factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a mass vector sums to one.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Uniform grid `{0, 1/n, ..., 1}` on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateGrid {
    n: usize,
}

impl StateGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("grid needs at least one subdivision".into()));
        }
        Ok(Self { n })
    }

    /// Number of subdivisions.
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    /// Number of grid points, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn point(&self, index: usize) -> f64 {
        index as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point closest to `x`, or an error if `x` is not on the grid.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let scaled = x * self.n as f64;
        let idx = scaled.round();
        if !x.is_finite() || idx < 0.0 || idx > self.n as f64 || (scaled - idx).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("state {x} is not on the grid")));
        }
        Ok(idx as usize)
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index > self.n {
            return Err(Error::StateOutOfRange { index, len: self.len() });
        }
        Ok(())
    }

    /// Largest distance between two grid points. Always 1 on the unit interval.
    pub fn diameter(&self) -> f64 {
        1.0
    }
}

/// Probability vector over the points of a [`StateGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDistribution {
    mass: Vec<f64>,
    grid: StateGrid,
}

impl PopulationDistribution {
    pub fn new(grid: StateGrid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: mass.len() });
        }
        if let Some(bad) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {bad} is not a non-negative number")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!("mass sums to {total}")));
        }
        Ok(Self { mass, grid })
    }

    /// Builds a distribution from non-negative weights, dividing by their total.
    pub fn from_weights(grid: StateGrid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self { mass: weights.into_iter().map(|w| w / total).collect(), grid })
    }

    pub fn uniform(grid: StateGrid) -> Self {
        let len = grid.len();
        Self { mass: vec![1.0 / len as f64; len], grid }
    }

    pub fn point_mass(grid: StateGrid, index: usize) -> Result<Self> {
        grid.check_index(index)?;
        let mut mass = vec![0.0; grid.len()];
        mass[index] = 1.0;
        Ok(Self { mass, grid })
    }

    pub fn grid(&self) -> StateGrid {
        self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Mean state `sum_s s * z(s)`.
    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(i, m)| self.grid.point(i) * m).sum()
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.mass
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect()
    }

    /// Convex combination `(1 - weight) * self + weight * other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch { left: self.grid.n, right: other.grid.n });
        }
        let mass = self.mass.iter().zip(&other.mass).map(|(a, b)| (1.0 - weight) * a + weight * b).collect();
        Self::from_weights(self.grid, mass)
    }

    /// Index sampled by inverse CDF from a uniform draw in `[0, 1)`.
    pub fn sample_index(&self, u: f64) -> usize {
        sample_index(&self.mass, u)
    }
}

/// Inverse-CDF sampling from an unnormalised-safe probability vector.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated total; return the last state with mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Ordered set of integer-coded actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSet {
    actions: Vec<i64>,
}

impl ActionSet {
    pub fn new(actions: Vec<i64>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidModel("action set is empty".into()));
        }
        for (i, a) in actions.iter().enumerate() {
            if actions[..i].contains(a) {
                return Err(Error::InvalidModel(format!("duplicate action {a}")));
            }
        }
        Ok(Self { actions })
    }

    /// The binary set `{0, 1}`.
    pub fn binary() -> Self {
        Self { actions: vec![0, 1] }
    }

    pub fn actions(&self) -> &[i64] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn action(&self, index: usize) -> i64 {
        self.actions[index]
    }

    pub fn index_of(&self, action: i64) -> Result<usize> {
        self.actions.iter().position(|a| *a == action).ok_or(Error::UnknownAction(action))
    }

    /// Smallest gap between two distinct actions; `None` for a singleton set.
    pub fn min_gap(&self) -> Option<f64> {
        let mut sorted = self.actions.clone();
        sorted.sort_unstable();
        sorted.windows(2).map(|w| (w[1] - w[0]) as f64).reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DiscountFactor(f64);

impl DiscountFactor {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidConfig(format!("discount factor {gamma} must lie in (0, 1)")));
        }
        Ok(Self(gamma))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DiscountFactor {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DiscountFactor> for f64 {
    fn from(value: DiscountFactor) -> f64 {
        value.0
    }
}
