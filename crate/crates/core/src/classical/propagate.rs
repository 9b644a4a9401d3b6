//! Deterministic propagators. Each one reduces to a family of 3x3 transfer
//! maps `p(t) = T(t) p0`, computed once per time grid and reusable across
//! initial conditions.

use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::fractional::SpectralDecomposition;
use super::{check_grid, Generator3, MemoryConfig, ProbTrajectory, SimplexPoint};
use crate::error::{Error, Result};

/// How the initial mass of each state is split over its two Erlang phases.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseStart {
    /// All mass in phase 1: observation starts at a renewal instant.
    #[default]
    Fresh,
    /// Half of each state's mass in each phase.
    Stationary,
}

/// `exp(t K) p0`.
pub fn markov_propagate(gen: &Generator3, p0: &SimplexPoint, t: f64) -> Result<SimplexPoint> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be >= 0, got {t}")));
    }
    let p = (gen.rates() * t).exp() * p0.to_vector();
    SimplexPoint::from_propagated([p[0], p[1], p[2]])
}

/// Exponential-kernel GME `p' = int_0^t gamma e^{-gamma (t-s)} K p(s) ds`,
/// solved exactly through the embedding `p' = q`, `q' = gamma K p - gamma q`.
pub fn gme_exponential_propagate(
    gen: &Generator3,
    gamma: f64,
    p0: &SimplexPoint,
    grid: &[f64],
) -> Result<ProbTrajectory> {
    TransferPlan::gme_exponential(gen, gamma, grid)?.apply(p0)
}

/// Phase-type generator on the states `(i, phase)`, index `2 i + phase`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseEmbedding {
    pub generator: SMatrix<f64, 6, 6>,
}

impl PhaseEmbedding {
    /// Observed marginals `p_i = p_(i,1) + p_(i,2)`.
    pub fn observe(&self, x: &SMatrix<f64, 6, 1>) -> Vector3<f64> {
        Vector3::new(x[0] + x[1], x[2] + x[3], x[4] + x[5])
    }

    pub fn observation_matrix() -> SMatrix<f64, 3, 6> {
        SMatrix::<f64, 3, 6>::from_fn(|i, j| if j / 2 == i { 1.0 } else { 0.0 })
    }

    pub fn lift_matrix(start: PhaseStart) -> SMatrix<f64, 6, 3> {
        SMatrix::<f64, 6, 3>::from_fn(|r, i| {
            if r / 2 != i {
                return 0.0;
            }
            match (start, r % 2) {
                (PhaseStart::Fresh, 0) => 1.0,
                (PhaseStart::Fresh, _) => 0.0,
                (PhaseStart::Stationary, _) => 0.5,
            }
        })
    }
}

/// Erlang-2 semi-Markov embedding: the sojourn in state `i` is
/// Erlang(2, 2 r_i) (mean `1 / r_i`) and jumps follow `P_ij = K_ji / r_i`,
/// so the jump chain, the mean sojourns and hence `pi` are those of `K`.
pub fn erlang2_phase_embed(gen: &Generator3) -> Result<PhaseEmbedding> {
    let r = gen.exit_rates();
    if let Some(i) = r.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Degenerate(format!("state {} is absorbing", i + 1)));
    }
    let k = gen.rates();
    let mut a = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        let (p1, p2) = (2 * i, 2 * i + 1);
        a[(p1, p1)] = -2.0 * r[i];
        a[(p2, p1)] = 2.0 * r[i];
        a[(p2, p2)] = -2.0 * r[i];
        for j in 0..3 {
            if j != i {
                // 2 r_i * K_ji / r_i
                a[(2 * j, p2)] = 2.0 * k[(j, i)];
            }
        }
    }
    Ok(PhaseEmbedding { generator: a })
}

/// Erlang-2 semi-Markov marginals with all initial mass in phase 1.
pub fn erlang2_propagate(
    gen: &Generator3,
    p0: &SimplexPoint,
    grid: &[f64],
) -> Result<ProbTrajectory> {
    erlang2_propagate_with(gen, p0, grid, PhaseStart::Fresh)
}

pub fn erlang2_propagate_with(
    gen: &Generator3,
    p0: &SimplexPoint,
    grid: &[f64],
    start: PhaseStart,
) -> Result<ProbTrajectory> {
    TransferPlan::erlang2(gen, grid, start)?.apply(p0)
}

/// Transfer maps `T(t_k)` of one propagator on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferPlan {
    times: Vec<f64>,
    maps: Vec<Matrix3<f64>>,
}

fn embedded_maps(
    a: &SMatrix<f64, 6, 6>,
    lift: &SMatrix<f64, 6, 3>,
    obs: &SMatrix<f64, 3, 6>,
    grid: &[f64],
) -> Vec<Matrix3<f64>> {
    grid.iter().map(|&t| obs * (a * t).exp() * lift).collect()
}

impl TransferPlan {
    pub fn markov(gen: &Generator3, grid: &[f64]) -> Result<Self> {
        check_grid(grid)?;
        let maps = grid.iter().map(|&t| (gen.rates() * t).exp()).collect();
        Ok(Self::from_parts(grid, maps))
    }

    pub fn gme_exponential(gen: &Generator3, gamma: f64, grid: &[f64]) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("gamma must be > 0, got {gamma}")));
        }
        check_grid(grid)?;
        let mut a = SMatrix::<f64, 6, 6>::zeros();
        let k = gen.rates();
        for i in 0..3 {
            a[(i, i + 3)] = 1.0;
            a[(i + 3, i + 3)] = -gamma;
            for j in 0..3 {
                a[(i + 3, j)] = gamma * k[(i, j)];
            }
        }
        let lift = SMatrix::<f64, 6, 3>::from_fn(|r, c| if r == c { 1.0 } else { 0.0 });
        let obs = SMatrix::<f64, 3, 6>::from_fn(|r, c| if r == c { 1.0 } else { 0.0 });
        Ok(Self::from_parts(grid, embedded_maps(&a, &lift, &obs, grid)))
    }

    pub fn erlang2(gen: &Generator3, grid: &[f64], start: PhaseStart) -> Result<Self> {
        check_grid(grid)?;
        let embed = erlang2_phase_embed(gen)?;
        let maps = embedded_maps(
            &embed.generator,
            &PhaseEmbedding::lift_matrix(start),
            &PhaseEmbedding::observation_matrix(),
            grid,
        );
        Ok(Self::from_parts(grid, maps))
    }

    pub fn fractional(gen: &Generator3, alpha: f64, grid: &[f64]) -> Result<Self> {
        check_grid(grid)?;
        let spectral = SpectralDecomposition::new(gen)?;
        let maps = spectral.transfer_maps(alpha, grid)?;
        Ok(Self::from_parts(grid, maps))
    }

    /// Plan for any deterministic memory kind.
    pub fn for_memory(gen: &Generator3, memory: &MemoryConfig, grid: &[f64]) -> Result<Self> {
        memory.validate()?;
        match *memory {
            MemoryConfig::Markov {} => Self::markov(gen, grid),
            MemoryConfig::GmeExponential { gamma } => Self::gme_exponential(gen, gamma, grid),
            MemoryConfig::Erlang2Embedded { phase_start } => Self::erlang2(gen, grid, phase_start),
            MemoryConfig::Fractional { alpha } => Self::fractional(gen, alpha, grid),
            MemoryConfig::Erlang2MonteCarlo { .. } => Err(Error::domain(
                "Monte Carlo memory has no deterministic transfer plan",
            )),
        }
    }

    fn from_parts(grid: &[f64], maps: Vec<Matrix3<f64>>) -> Self {
        Self {
            times: grid.to_vec(),
            maps,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn apply(&self, p0: &SimplexPoint) -> Result<ProbTrajectory> {
        let v = p0.to_vector();
        let states = self
            .maps
            .iter()
            .map(|m| {
                let p = m * v;
                SimplexPoint::from_propagated([p[0], p[1], p[2]])
            })
            .collect::<Result<Vec<_>>>()?;
        ProbTrajectory::new(self.times.clone(), states)
    }
}

/// Output of [`propagate`]; Monte Carlo runs carry per-bin standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagated {
    pub trajectory: ProbTrajectory,
    pub std_err: Option<Vec<[f64; 3]>>,
    pub n_traj: Option<usize>,
}

/// Propagates `p0` on `grid` under any memory construction.
pub fn propagate(
    gen: &Generator3,
    memory: &MemoryConfig,
    p0: &SimplexPoint,
    grid: &[f64],
) -> Result<Propagated> {
    memory.validate()?;
    if let MemoryConfig::Erlang2MonteCarlo { n_traj, seed } = *memory {
        let mc = super::erlang2_monte_carlo(gen, p0, grid, n_traj, seed)?;
        return Ok(Propagated {
            trajectory: mc.trajectory,
            std_err: Some(mc.std_err),
            n_traj: Some(n_traj),
        });
    }
    Ok(Propagated {
        trajectory: TransferPlan::for_memory(gen, memory, grid)?.apply(p0)?,
        std_err: None,
        n_traj: None,
    })
}
