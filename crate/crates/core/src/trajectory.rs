use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sampled scalar time series `I(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory; times must be strictly increasing and at least
    /// two samples are required.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::domain(format!(
                "trajectory has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::domain("trajectory needs at least two samples"));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::domain(format!(
                "trajectory times not strictly increasing at index {}",
                i + 1
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("trajectory values must be finite"));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// The same path run backwards, re-timed to start at zero.
    pub fn reversed(&self) -> Self {
        let end = *self.times.last().expect("len >= 2");
        let times = self.times.iter().rev().map(|t| end - t).collect();
        let values = self.values.iter().rev().copied().collect();
        Self { times, values }
    }
}
