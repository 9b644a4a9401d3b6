use nalgebra::Matrix3;

use super::SimplexPoint;
use crate::error::{Error, Result};

/// A three-state rate matrix (column convention) and its stationary law.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator3 {
    rates: Matrix3<f64>,
    pi: SimplexPoint,
}

impl Generator3 {
    /// Validates `rates`: non-negative off-diagonal entries, zero column sums,
    /// irreducibility and `K pi = 0`.
    pub fn new(rates: Matrix3<f64>) -> Result<Self> {
        let scale = rates.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for j in 0..3 {
            for i in 0..3 {
                let r = rates[(i, j)];
                if !r.is_finite() {
                    return Err(Error::domain("rate matrix entries must be finite"));
                }
                if i != j && r < 0.0 {
                    return Err(Error::domain(format!(
                        "rate {}->{} is negative ({r})",
                        j + 1,
                        i + 1
                    )));
                }
            }
            let col: f64 = rates.column(j).sum();
            if col.abs() > 1e-12 * scale {
                return Err(Error::domain(format!(
                    "column {} sums to {col}, expected 0",
                    j + 1
                )));
            }
        }
        if !strongly_connected(&rates) {
            return Err(Error::Degenerate(
                "rate graph is not strongly connected".into(),
            ));
        }
        let pi = stationary(&rates)?;
        let residual = (rates * pi.to_vector()).amax();
        if residual > 1e-10 * scale {
            return Err(Error::Numerical(format!(
                "|K pi| = {residual} exceeds tolerance"
            )));
        }
        Ok(Self { rates, pi })
    }

    /// Row-major entries, `rows[i][j]` = rate `j -> i`.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    /// Builds `K` from off-diagonal rates `rate(from, to)`, filling the
    /// diagonal so that columns sum to zero.
    pub fn from_jump_rates<F: Fn(usize, usize) -> f64>(rate: F) -> Result<Self> {
        let mut k = Matrix3::zeros();
        for from in 0..3 {
            for to in 0..3 {
                if from != to {
                    k[(to, from)] = rate(from, to);
                }
            }
            k[(from, from)] = -(0..3)
                .filter(|&to| to != from)
                .map(|to| k[(to, from)])
                .sum::<f64>();
        }
        Self::new(k)
    }

    /// All off-diagonal rates equal to `rate`.
    pub fn symmetric_uniform(rate: f64) -> Result<Self> {
        Self::from_jump_rates(|_, _| rate)
    }

    /// Unidirectional cycle 1 -> 2 -> 3 -> 1.
    pub fn cycle(rate: f64) -> Result<Self> {
        Self::from_jump_rates(|from, to| if to == (from + 1) % 3 { rate } else { 0.0 })
    }

    /// Reversible reference generator: `K12 = 2, K21 = 1, K23 = K32 = 1,
    /// K13 = 0.5, K31 = 0.25`, with `pi = (1/2, 1/4, 1/4)`.
    pub fn reference() -> Self {
        Self::from_rows([[-1.25, 2.0, 0.5], [1.0, -3.0, 1.0], [0.25, 1.0, -1.5]])
            .expect("reference generator is valid")
    }

    pub fn rates(&self) -> &Matrix3<f64> {
        &self.rates
    }

    pub fn pi(&self) -> &SimplexPoint {
        &self.pi
    }

    /// `r_i = -K_ii`.
    pub fn exit_rates(&self) -> [f64; 3] {
        [
            -self.rates[(0, 0)],
            -self.rates[(1, 1)],
            -self.rates[(2, 2)],
        ]
    }

    /// Induced 1-norm (largest absolute column sum).
    pub fn norm(&self) -> f64 {
        (0..3)
            .map(|j| self.rates.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Whether `pi_i K_ji = pi_j K_ij` for all pairs.
    pub fn is_reversible(&self, tol: f64) -> bool {
        let pi = self.pi.as_array();
        (0..3).all(|i| {
            (0..3).all(|j| (pi[i] * self.rates[(j, i)] - pi[j] * self.rates[(i, j)]).abs() <= tol)
        })
    }
}

fn strongly_connected(k: &Matrix3<f64>) -> bool {
    // reach[i][j]: j reachable from i
    let mut reach = [[false; 3]; 3];
    for (i, row) in reach.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = i == j || k[(j, i)] > 0.0;
        }
    }
    for m in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                if reach[i][m] && reach[m][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach.iter().all(|row| row.iter().all(|&r| r))
}

/// Diagonal cofactors of `K`; for zero column sums they span its null space.
pub(crate) fn diagonal_cofactors(k: &Matrix3<f64>) -> [f64; 3] {
    let minor = |a: usize, b: usize| k[(a, a)] * k[(b, b)] - k[(a, b)] * k[(b, a)];
    [minor(1, 2), minor(0, 2), minor(0, 1)]
}

/// Unique stationary distribution of an irreducible generator.
pub fn stationary(k: &Matrix3<f64>) -> Result<SimplexPoint> {
    let c = diagonal_cofactors(k);
    let total: f64 = c.iter().sum();
    let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(total > 1e-14 * scale * scale) || c.iter().any(|&x| x < 0.0) {
        return Err(Error::Degenerate(
            "generator null space is not one-dimensional".into(),
        ));
    }
    let mut p = [c[0] / total, c[1] / total, c[2] / total];
    // renormalize after rounding so the point passes the strict simplex check
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    let drift = 1.0 - p.iter().sum::<f64>();
    p[2] += drift;
    SimplexPoint::new(p)
}
