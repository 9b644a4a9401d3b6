//! Stochastic realization of the Erlang-2 semi-Markov process.
//!
//! Trajectories are split into fixed chunks of [`MC_CHUNK`] paths. Chunk `c`
//! draws from ChaCha8 seeded with `seed` on stream `c`, so the occupation
//! counts depend only on `(seed, n_traj)` and not on the thread schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{check_grid, Generator3, ProbTrajectory, SimplexPoint};
use crate::error::{Error, Result};

pub const MC_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct McTrajectory {
    pub trajectory: ProbTrajectory,
    /// Binomial standard error `sqrt(p (1 - p) / n)` per bin and state.
    pub std_err: Vec<[f64; 3]>,
    pub counts: Vec<[u64; 3]>,
    pub n_traj: usize,
    pub seed: u64,
}

fn categorical<R: Rng>(rng: &mut R, weights: &[f64; 3]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn erlang2<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let a: f64 = rng.sample(Exp1);
    let b: f64 = rng.sample(Exp1);
    (a + b) / rate
}

/// Simulates `n_traj` independent semi-Markov paths and bins the occupied
/// state at each grid time (right-continuous paths).
pub fn erlang2_monte_carlo(
    gen: &Generator3,
    p0: &SimplexPoint,
    grid: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<McTrajectory> {
    check_grid(grid)?;
    if n_traj == 0 {
        return Err(Error::domain("n_traj must be >= 1"));
    }
    let exit = gen.exit_rates();
    if let Some(i) = exit.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::Degenerate(format!("state {} is absorbing", i + 1)));
    }
    let k = gen.rates();
    let jump: Vec<[f64; 3]> = (0..3)
        .map(|i| {
            let mut row = [0.0; 3];
            for (j, w) in row.iter_mut().enumerate() {
                if j != i {
                    *w = k[(j, i)] / exit[i];
                }
            }
            row
        })
        .collect();
    let initial = *p0.as_array();
    let n_chunks = n_traj.div_ceil(MC_CHUNK);

    let run_chunk = |c: usize| -> Vec<[u64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let paths = MC_CHUNK.min(n_traj - c * MC_CHUNK);
        let mut counts = vec![[0u64; 3]; grid.len()];
        for _ in 0..paths {
            let mut state = categorical(&mut rng, &initial);
            let mut next_jump = erlang2(&mut rng, 2.0 * exit[state]);
            for (bin, &t) in counts.iter_mut().zip(grid) {
                while next_jump <= t {
                    state = categorical(&mut rng, &jump[state]);
                    next_jump += erlang2(&mut rng, 2.0 * exit[state]);
                }
                bin[state] += 1;
            }
        }
        counts
    };

    let counts = (0..n_chunks).into_par_iter().map(run_chunk).reduce(
        || vec![[0u64; 3]; grid.len()],
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for s in 0..3 {
                    x[s] += y[s];
                }
            }
            a
        },
    );

    let n = n_traj as f64;
    let mut states = Vec::with_capacity(grid.len());
    let mut std_err = Vec::with_capacity(grid.len());
    for c in &counts {
        let p = [c[0] as f64 / n, c[1] as f64 / n, c[2] as f64 / n];
        std_err.push(p.map(|x| (x * (1.0 - x) / n).sqrt()));
        states.push(SimplexPoint::from_propagated(p)?);
    }
    Ok(McTrajectory {
        trajectory: ProbTrajectory::new(grid.to_vec(), states)?,
        std_err,
        counts,
        n_traj,
        seed,
    })
}
