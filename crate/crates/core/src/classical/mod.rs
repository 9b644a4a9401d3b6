//! Three-state classical relaxation with a fixed generator `K` and
//! stationary distribution `pi`, under several memory constructions.
//!
//! Column convention throughout: `K[(i, j)]` is the rate of the jump
//! `j -> i`, columns sum to zero and `dp/dt = K p`.

mod fractional;
mod generator;
mod montecarlo;
mod propagate;

pub use fractional::{caputo_oracle, fractional_propagate, SpectralDecomposition};
pub use generator::{stationary, Generator3};
pub use montecarlo::{erlang2_monte_carlo, McTrajectory, MC_CHUNK};
pub use propagate::{
    erlang2_phase_embed, erlang2_propagate, erlang2_propagate_with, gme_exponential_propagate,
    markov_propagate, propagate, PhaseEmbedding, PhaseStart, Propagated, TransferPlan,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum p = 1` for user-supplied points.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Tolerance on `sum p = 1` and negativity for propagated states.
pub const PROPAGATION_TOL: f64 = 1e-8;
/// Negative round-off below this magnitude is clipped silently.
pub const CLIP_WARN: f64 = 1e-10;

/// A probability vector on the three-state simplex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SimplexPoint([f64; 3]);

impl SimplexPoint {
    pub fn new(p: [f64; 3]) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain(format!(
                "probabilities must be >= 0, got {p:?}"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!(
                "probabilities must sum to 1 (within {SIMPLEX_TOL}), got {sum}"
            )));
        }
        Ok(Self(p))
    }

    /// Checks a propagated state, clipping negative round-off to zero.
    pub(crate) fn from_propagated(mut p: [f64; 3]) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > PROPAGATION_TOL {
            return Err(Error::Numerical(format!(
                "propagated state leaves the simplex: sum = {sum}"
            )));
        }
        for x in p.iter_mut() {
            if *x < -PROPAGATION_TOL {
                return Err(Error::Numerical(format!(
                    "propagated state has negative probability {x}"
                )));
            }
            if *x < 0.0 {
                if *x < -CLIP_WARN {
                    log::warn!("clipping negative probability {x} to zero");
                }
                *x = 0.0;
            }
        }
        Ok(Self(p))
    }

    pub fn vertex(i: usize) -> Self {
        let mut p = [0.0; 3];
        p[i] = 1.0;
        Self(p)
    }

    pub fn uniform() -> Self {
        let third = 1.0 / 3.0;
        Self([third, third, 1.0 - 2.0 * third])
    }

    pub fn as_array(&self) -> &[f64; 3] {
        &self.0
    }

    pub fn to_vector(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::from(self.0)
    }

    pub fn max_abs_diff(&self, other: &SimplexPoint) -> f64 {
        (0..3)
            .map(|i| (self.0[i] - other.0[i]).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<[f64; 3]> for SimplexPoint {
    type Error = Error;

    fn try_from(p: [f64; 3]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<SimplexPoint> for [f64; 3] {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

/// A sampled path on the simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbTrajectory {
    times: Vec<f64>,
    states: Vec<SimplexPoint>,
}

impl ProbTrajectory {
    pub fn new(times: Vec<f64>, states: Vec<SimplexPoint>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::domain(
                "trajectory needs matching, non-empty times and states",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "trajectory times must be strictly increasing",
            ));
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SimplexPoint] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// A scalar observable evaluated along the path.
    pub fn observe<F>(&self, f: F) -> Result<crate::trajectory::Trajectory>
    where
        F: Fn(&SimplexPoint) -> f64,
    {
        crate::trajectory::Trajectory::new(self.times.clone(), self.states.iter().map(f).collect())
    }

    /// Largest componentwise deviation between two paths on the same grid.
    pub fn sup_distance(&self, other: &ProbTrajectory) -> f64 {
        self.states
            .iter()
            .zip(other.states.iter())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// The memory construction layered on the reference generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MemoryConfig {
    Markov {},
    /// Exponential kernel `gamma exp(-gamma tau)`, memory time `1 / gamma`.
    GmeExponential {
        gamma: f64,
    },
    Erlang2Embedded {
        #[serde(default)]
        phase_start: PhaseStart,
    },
    Erlang2MonteCarlo {
        n_traj: usize,
        seed: u64,
    },
    Fractional {
        alpha: f64,
    },
}

impl MemoryConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MemoryConfig::GmeExponential { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::domain(format!("gamma must be > 0, got {gamma}")))
            }
            MemoryConfig::Fractional { alpha } => crate::mlfunc::validate_alpha(alpha),
            MemoryConfig::Erlang2MonteCarlo { n_traj: 0, .. } => {
                Err(Error::domain("n_traj must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MemoryConfig::Markov {} => "markov",
            MemoryConfig::GmeExponential { .. } => "gme_exponential",
            MemoryConfig::Erlang2Embedded { .. } => "erlang2_embedded",
            MemoryConfig::Erlang2MonteCarlo { .. } => "erlang2_montecarlo",
            MemoryConfig::Fractional { .. } => "fractional",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, MemoryConfig::Erlang2MonteCarlo { .. })
    }
}

/// `steps + 1` equally spaced times on `[0, horizon]`.
pub fn uniform_grid(horizon: f64, steps: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
        return Err(Error::domain(format!(
            "need horizon > 0 and steps >= 1, got {horizon} and {steps}"
        )));
    }
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                horizon
            } else {
                horizon * i as f64 / steps as f64
            }
        })
        .collect())
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("time grid is empty"));
    }
    if grid[0] != 0.0 {
        return Err(Error::domain(format!(
            "time grid must start at 0, starts at {}",
            grid[0]
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid[grid.len() - 1].is_finite() {
        return Err(Error::domain(
            "time grid must be finite and strictly increasing",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new([0.2, 0.3, 0.5]).is_ok());
        assert!(SimplexPoint::new([0.2, 0.3, 0.6]).is_err());
        assert!(SimplexPoint::new([-0.1, 0.6, 0.5]).is_err());
        assert!(SimplexPoint::new([f64::NAN, 0.5, 0.5]).is_err());
    }

    #[test]
    fn propagated_states_are_clipped() {
        let p = SimplexPoint::from_propagated([1.0 + 1e-12, -1e-12, 0.0]).unwrap();
        assert_eq!(p.as_array()[1], 0.0);
        assert!(SimplexPoint::from_propagated([1.1, -0.1, 0.0]).is_err());
        assert!(SimplexPoint::from_propagated([0.5, 0.5, 0.1]).is_err());
    }

    #[test]
    fn memory_config_serde_and_validation() {
        let m: MemoryConfig =
            serde_json::from_str(r#"{"kind":"gme_exponential","gamma":0.5}"#).unwrap();
        assert_eq!(m, MemoryConfig::GmeExponential { gamma: 0.5 });
        assert!(MemoryConfig::GmeExponential { gamma: 0.0 }
            .validate()
            .is_err());
        assert!(MemoryConfig::Fractional { alpha: 1.2 }.validate().is_err());
        assert!(MemoryConfig::Erlang2MonteCarlo { n_traj: 0, seed: 1 }
            .validate()
            .is_err());
        assert!(serde_json::from_str::<MemoryConfig>(r#"{"kind":"markov","gamma":1}"#).is_err());
    }

    #[test]
    fn grids() {
        let g = uniform_grid(2.0, 4).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(check_grid(&[0.1, 0.2]).is_err());
        assert!(check_grid(&[0.0, 0.2, 0.2]).is_err());
    }
}
