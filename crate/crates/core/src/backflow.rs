//! Backflow functional: the total rise of an information observable,
//! `N_I = sum_k [I(t_k^end) - I(t_k^start)]` over the maximal intervals on
//! which `I` increases.

use serde::{Deserialize, Serialize};

use crate::trajectory::Trajectory;

/// Relative tolerance (times `max |I|`) below which an increment is flat.
pub const FLAT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiseInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub rise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackflowResult {
    pub n_i: f64,
    pub intervals: Vec<RiseInterval>,
    pub epsilon: f64,
    /// Net decrease over everything outside the kept intervals, so that
    /// `I(end) - I(start) = n_i - total_fall`.
    pub total_fall: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Up,
    Flat,
    Down,
}

/// Index pairs `(start, end)` of maximal rising runs. Flat increments do not
/// break a run; a run ends at its last strictly rising increment.
fn rising_runs(values: &[f64]) -> Vec<(usize, usize)> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let flat = FLAT_TOLERANCE * scale;
    let classify = |d: f64| {
        if d > flat {
            Step::Up
        } else if d < -flat {
            Step::Down
        } else {
            Step::Flat
        }
    };

    let mut runs = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    for i in 0..values.len().saturating_sub(1) {
        match classify(values[i + 1] - values[i]) {
            Step::Up => {
                open = Some(match open {
                    Some((start, _)) => (start, i + 1),
                    None => (i, i + 1),
                });
            }
            Step::Flat => {}
            Step::Down => {
                if let Some(run) = open.take() {
                    runs.push(run);
                }
            }
        }
    }
    if let Some(run) = open {
        runs.push(run);
    }
    runs
}

/// Total backflow of a sampled trajectory. Intervals whose rise does not
/// exceed `epsilon` are discarded.
pub fn backflow_functional(traj: &Trajectory, epsilon: f64) -> BackflowResult {
    let epsilon = epsilon.max(0.0);
    let (t, v) = (traj.times(), traj.values());
    let mut intervals = Vec::new();
    let mut n_i = 0.0;
    let mut inside = 0.0;
    for (start, end) in rising_runs(v) {
        let rise = v[end] - v[start];
        if rise > epsilon {
            n_i += rise;
            inside += rise;
            intervals.push(RiseInterval {
                t_start: t[start],
                t_end: t[end],
                rise,
            });
        }
    }
    let net = v[v.len() - 1] - v[0];
    BackflowResult {
        n_i,
        intervals,
        epsilon,
        total_fall: inside - net,
    }
}

/// Bounds of the intervals kept by [`backflow_functional`].
pub fn positive_intervals(traj: &Trajectory, epsilon: f64) -> Vec<(f64, f64)> {
    backflow_functional(traj, epsilon)
        .intervals
        .into_iter()
        .map(|iv| (iv.t_start, iv.t_end))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(t: &[f64], v: &[f64]) -> Trajectory {
        Trajectory::new(t.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn four_sample_example() {
        let tr = traj(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.5, 2.0]);
        let r = backflow_functional(&tr, 0.0);
        assert_eq!(r.n_i, 2.5);
        assert_eq!(positive_intervals(&tr, 0.0), vec![(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(r.total_fall, 0.5);
    }

    #[test]
    fn monotone_decay_has_no_backflow() {
        let t: Vec<f64> = (0..=500).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let r = backflow_functional(&traj(&t, &v), 0.0);
        assert_eq!(r.n_i, 0.0);
        assert!(r.intervals.is_empty());
    }

    #[test]
    fn flat_plateau_does_not_split_a_rise() {
        let tr = traj(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.0, 1.0, 1.0, 2.0, 1.0]);
        let r = backflow_functional(&tr, 0.0);
        assert_eq!(r.intervals.len(), 1);
        assert_eq!(r.n_i, 2.0);
        assert_eq!((r.intervals[0].t_start, r.intervals[0].t_end), (0.0, 3.0));
    }

    #[test]
    fn trailing_plateau_is_not_part_of_the_interval() {
        let tr = traj(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(positive_intervals(&tr, 0.0), vec![(0.0, 1.0)]);
    }

    #[test]
    fn epsilon_discards_small_rises() {
        let tr = traj(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 0.05, 0.0, 0.5]);
        let r = backflow_functional(&tr, 0.1);
        assert_eq!(r.intervals.len(), 1);
        assert_eq!(r.n_i, 0.5);
        // identity still holds with the small rise folded into the fall
        assert!(((0.5 - 1.0) - (r.n_i - r.total_fall)).abs() < 1e-15);
    }

    #[test]
    fn reversal_swaps_rise_and_fall() {
        let tr = traj(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.5, 2.0]);
        let back = backflow_functional(&tr.reversed(), 0.0);
        assert_eq!(back.n_i, 0.5);
    }
}
