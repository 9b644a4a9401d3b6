//! Information observables on the three-state simplex (natural logarithms).

use serde::{Deserialize, Serialize};

use crate::classical::{ProbTrajectory, SimplexPoint};
use crate::error::{Error, Result};

/// Probabilities below this are treated as exactly zero.
pub const ZERO_PROBABILITY: f64 = 1e-15;
/// Tolerance for locating the first global entropy maximum.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn plogp(p: f64) -> f64 {
    if p < ZERO_PROBABILITY {
        0.0
    } else {
        p * p.ln()
    }
}

/// Shannon entropy `-sum p ln p` in nats.
pub fn shannon_entropy(p: &SimplexPoint) -> f64 {
    -p.as_array().iter().map(|&x| plogp(x)).sum::<f64>()
}

/// Relative entropy `D(p || pi)` in nats. Every entry of `pi` must be positive.
pub fn kl_to_stationary(p: &SimplexPoint, pi: &SimplexPoint) -> Result<f64> {
    let (p, pi) = (p.as_array(), pi.as_array());
    if let Some(i) = pi.iter().position(|&q| !(q > 0.0)) {
        return Err(Error::domain(format!(
            "reference distribution has zero mass in state {}",
            i + 1
        )));
    }
    let d: f64 = p
        .iter()
        .zip(pi.iter())
        .map(|(&a, &b)| {
            if a < ZERO_PROBABILITY {
                0.0
            } else {
                a * (a / b).ln()
            }
        })
        .sum();
    Ok(d.max(0.0))
}

/// Delta-method standard error of the plug-in entropy estimate from `n`
/// samples: `sqrt((sum p (ln p)^2 - H^2) / n)`.
pub fn entropy_standard_error(p: &SimplexPoint, n: usize) -> f64 {
    let h = shannon_entropy(p);
    let second: f64 = p
        .as_array()
        .iter()
        .filter(|&&x| x >= ZERO_PROBABILITY)
        .map(|&x| x * x.ln() * x.ln())
        .sum();
    ((second - h * h).max(0.0) / n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvershootResult {
    pub h_max: f64,
    pub t_max: f64,
    pub h_min_after: f64,
    pub delta_h: f64,
}

/// Entropy overshoot `H_max - min_{t >= t_max} H(t)`, where `t_max` is the
/// earliest sample within [`TIE_TOLERANCE`] of the global maximum.
pub fn entropy_overshoot(traj: &ProbTrajectory) -> OvershootResult {
    let h: Vec<f64> = traj.states().iter().map(shannon_entropy).collect();
    overshoot_of_series(traj.times(), &h)
}

pub(crate) fn overshoot_of_series(times: &[f64], h: &[f64]) -> OvershootResult {
    let peak = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let i_max = h
        .iter()
        .position(|&v| v >= peak - TIE_TOLERANCE)
        .expect("non-empty series");
    let h_max = h[i_max];
    let h_min_after = h[i_max..].iter().copied().fold(f64::INFINITY, f64::min);
    OvershootResult {
        h_max,
        t_max: times[i_max],
        h_min_after,
        delta_h: (h_max - h_min_after).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn pt(a: f64, b: f64, c: f64) -> SimplexPoint {
        SimplexPoint::new([a, b, c]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let third = 1.0 / 3.0;
        assert!((shannon_entropy(&pt(third, third, 1.0 - 2.0 * third)) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_entropy(&pt(1.0, 0.0, 0.0)), 0.0);
        assert!((shannon_entropy(&pt(0.5, 0.5, 0.0)) - LN_2).abs() < 1e-16);
    }

    #[test]
    fn kl_examples() {
        let third = 1.0 / 3.0;
        let u = pt(third, third, 1.0 - 2.0 * third);
        assert_eq!(kl_to_stationary(&u, &u).unwrap(), 0.0);
        let d = kl_to_stationary(&pt(1.0, 0.0, 0.0), &u).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-15);
        let p = pt(0.5, 0.3, 0.2);
        let want = 0.5 * (1.5f64).ln() + 0.3 * (0.9f64).ln() + 0.2 * (0.6f64).ln();
        assert!((kl_to_stationary(&p, &u).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn kl_rejects_zero_reference() {
        let p = pt(0.5, 0.5, 0.0);
        assert!(matches!(kl_to_stationary(&p, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn overshoot_of_monotone_series_is_zero() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let r = overshoot_of_series(&t, &[0.0, 0.5, 0.9, 1.0]);
        assert_eq!(r.delta_h, 0.0);
        assert_eq!(r.t_max, 3.0);
    }

    #[test]
    fn overshoot_uses_first_maximum() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let r = overshoot_of_series(&t, &[0.0, 1.0, 0.7, 1.0, 0.8]);
        assert_eq!(r.t_max, 1.0);
        assert!((r.delta_h - 0.3).abs() < 1e-15);
    }
}
