//! Fractional two-state observable `b(t) = 1/4 E_a(-(lambda t)^a)^2 sin^2(omega t)`
//! and its integrated revival measure.
//!
//! The revival measure is reported at an explicit horizon `T`: for `a < 1/2`
//! the per-cycle rises decay like `t^(-2a)` and their sum diverges, so only
//! `N(T)` and its growth with `T` are meaningful there.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlfunc::{MittagLeffler, DEFAULT_TOL};
use crate::trajectory::Trajectory;

pub const DEFAULT_POINTS_PER_PERIOD: usize = 64;
pub const MIN_POINTS_PER_PERIOD: usize = 16;
pub const DEFAULT_MAX_POINTS: usize = 100_000_000;
/// Default horizon in units of `1 / lambda`.
pub const DEFAULT_HORIZON_LAMBDA_UNITS: f64 = 200.0;

const REFINE_TOL: f64 = 1e-9;
const MAX_REFINE_STEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumParams {
    pub alpha: f64,
    pub lambda: f64,
    pub omega: f64,
}

impl QuantumParams {
    pub fn new(alpha: f64, lambda: f64, omega: f64) -> Result<Self> {
        let p = Self {
            alpha,
            lambda,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        crate::mlfunc::validate_alpha(self.alpha)?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::domain(format!(
                "omega must be >= 0, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Time-grid resolution and size cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub points_per_period: usize,
    pub max_points: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            points_per_period: DEFAULT_POINTS_PER_PERIOD,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

impl Sampling {
    pub fn with_points_per_period(points_per_period: usize) -> Self {
        Self {
            points_per_period,
            ..Self::default()
        }
    }
}

/// Uniform grid `t_i = horizon * i / intervals`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub intervals: usize,
}

impl TimeGrid {
    pub fn points(&self) -> usize {
        self.intervals + 1
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.horizon
        } else {
            self.horizon * (i as f64 / self.intervals as f64)
        }
    }
}

/// Grid resolving every oscillation period with at least
/// `points_per_period` samples; for `omega = 0` a uniform grid of
/// `max(1024, 64 lambda horizon)` points.
pub fn time_grid(params: &QuantumParams, horizon: f64, sampling: &Sampling) -> Result<TimeGrid> {
    params.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    if sampling.points_per_period < MIN_POINTS_PER_PERIOD {
        return Err(Error::domain(format!(
            "points per period must be >= {MIN_POINTS_PER_PERIOD}, got {}",
            sampling.points_per_period
        )));
    }
    let points = if params.omega > 0.0 {
        (horizon * params.omega * sampling.points_per_period as f64 / (2.0 * PI)).ceil() + 1.0
    } else {
        (horizon * params.lambda * 64.0).ceil().max(1024.0)
    };
    if !(points <= sampling.max_points as f64) {
        return Err(Error::Resource(format!(
            "grid of {points} points exceeds the cap of {}",
            sampling.max_points
        )));
    }
    Ok(TimeGrid {
        horizon,
        intervals: points as usize - 1,
    })
}

/// Evaluator for one parameter set; reuses the Mittag-Leffler tables.
#[derive(Clone, Debug)]
pub struct QuantumModel {
    params: QuantumParams,
    ml: MittagLeffler,
}

impl QuantumModel {
    pub fn new(params: QuantumParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            ml: MittagLeffler::tabulated(params.alpha)?,
        })
    }

    /// Same evaluator tables with other parameters of equal `alpha`.
    pub fn with_params(&self, params: QuantumParams) -> Result<Self> {
        params.validate()?;
        if params.alpha != self.params.alpha {
            return Self::new(params);
        }
        Ok(Self {
            params,
            ml: self.ml.clone(),
        })
    }

    pub fn params(&self) -> &QuantumParams {
        &self.params
    }

    /// `E_a(-(lambda t)^a)`.
    pub fn envelope(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("t must be >= 0, got {t}")));
        }
        self.ml.envelope(self.params.lambda * t, DEFAULT_TOL)
    }

    pub fn b_qe(&self, t: f64) -> Result<f64> {
        let e = self.envelope(t)?;
        let s = (self.params.omega * t).sin();
        Ok(0.25 * e * e * s * s)
    }

    fn fd_step(&self) -> f64 {
        let p = &self.params;
        let inv_omega = if p.omega > 0.0 {
            1.0 / p.omega
        } else {
            f64::INFINITY
        };
        1e-6 * (1.0 / p.lambda).min(inv_omega)
    }

    /// `db/dt`, with the envelope derivative from a central difference.
    pub fn slope(&self, t: f64) -> Result<f64> {
        let h = self.fd_step();
        let e = self.envelope(t)?;
        let de = if t >= h {
            (self.envelope(t + h)? - self.envelope(t - h)?) / (2.0 * h)
        } else {
            (self.envelope(t + h)? - e) / h
        };
        let w = self.params.omega;
        let (s, c) = (w * t).sin_cos();
        Ok(0.5 * e * s * (de * s + w * e * c))
    }

    /// Locates the stationary point of `b` inside `[a, b]` by root finding on the
    /// slope (bracketed regula falsi); `None` when the slope does not change
    /// sign there.
    fn refine(&self, mut lo: f64, mut hi: f64) -> Result<Option<f64>> {
        let mut f_lo = self.slope(lo)?;
        let f_hi = self.slope(hi)?;
        if f_lo == 0.0 {
            return Ok(Some(lo));
        }
        if f_hi == 0.0 {
            return Ok(Some(hi));
        }
        if f_lo.signum() == f_hi.signum() {
            return Ok(None);
        }
        // Illinois variant of regula falsi
        let rate = self.params.lambda.max(self.params.omega);
        let mut f_hi = f_hi;
        let mut last_side = 0i8;
        let mut prev_x = f64::NAN;
        for _ in 0..MAX_REFINE_STEPS {
            if (hi - lo) * rate <= REFINE_TOL {
                break;
            }
            let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let f_x = self.slope(x)?;
            if f_x == 0.0 || (x - prev_x).abs() * rate <= REFINE_TOL {
                return Ok(Some(x));
            }
            prev_x = x;
            if f_x.signum() == f_lo.signum() {
                lo = x;
                f_lo = f_x;
                if last_side == -1 {
                    f_hi *= 0.5;
                }
                last_side = -1;
            } else {
                hi = x;
                f_hi = f_x;
                if last_side == 1 {
                    f_lo *= 0.5;
                }
                last_side = 1;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }
}

/// `b_qe(t)` for one parameter set.
pub fn b_qe(params: &QuantumParams, t: f64) -> Result<f64> {
    QuantumModel::new(*params)?.b_qe(t)
}

/// Samples `b_qe` on the grid of [`time_grid`].
pub fn sample_bqe(params: &QuantumParams, horizon: f64, sampling: &Sampling) -> Result<Trajectory> {
    let grid = time_grid(params, horizon, sampling)?;
    let model = QuantumModel::new(*params)?;
    let times: Vec<f64> = (0..grid.points()).map(|i| grid.time(i)).collect();
    let values = times
        .par_iter()
        .map(|&t| model.b_qe(t))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(times, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NqeReport {
    pub n_qe: f64,
    pub horizon: f64,
    pub grid_points: usize,
    pub points_per_period: usize,
    /// Extrema located by root finding on the slope.
    pub refined_extrema: usize,
    /// Extrema kept at their sampled value because the slope did not
    /// change sign across the neighbouring samples.
    pub unrefined_extrema: usize,
}

/// Integrated revival measure at a finite horizon.
pub fn n_qe(params: &QuantumParams, horizon: f64, sampling: &Sampling) -> Result<f64> {
    n_qe_report(params, horizon, sampling).map(|r| r.n_qe)
}

/// [`n_qe`] together with grid and refinement bookkeeping.
///
/// The grid is streamed: each discrete extremum is refined on the analytic
/// slope, and the rises between consecutive refined turning points are summed.
pub fn n_qe_report(params: &QuantumParams, horizon: f64, sampling: &Sampling) -> Result<NqeReport> {
    QuantumModel::new(*params)?.n_qe_report(horizon, sampling)
}

impl QuantumModel {
    /// See [`n_qe_report`].
    pub fn n_qe_report(&self, horizon: f64, sampling: &Sampling) -> Result<NqeReport> {
        let model = self;
        let params = &self.params;
        let grid = time_grid(params, horizon, sampling)?;
        let mut report = NqeReport {
            n_qe: 0.0,
            horizon,
            grid_points: grid.points(),
            points_per_period: sampling.points_per_period,
            refined_extrema: 0,
            unrefined_extrema: 0,
        };
        if params.omega == 0.0 {
            return Ok(report);
        }

        let mut total = 0.0;
        let mut last_turn = model.b_qe(0.0)?;
        let mut push_turn = |v: f64, total: &mut f64| {
            if v > last_turn {
                *total += v - last_turn;
            }
            last_turn = v;
        };

        let mut prev = model.b_qe(grid.time(0))?;
        let mut cur = model.b_qe(grid.time(1))?;
        for i in 1..grid.intervals {
            let next = model.b_qe(grid.time(i + 1))?;
            let (d_prev, d_next) = (cur - prev, next - cur);
            let is_max = d_prev > 0.0 && d_next <= 0.0;
            let is_min = d_prev < 0.0 && d_next >= 0.0;
            if is_max || is_min {
                let value = match model.refine(grid.time(i - 1), grid.time(i + 1))? {
                    Some(t) => {
                        report.refined_extrema += 1;
                        let v = model.b_qe(t)?;
                        if is_max {
                            v.max(cur)
                        } else {
                            v.min(cur)
                        }
                    }
                    None => {
                        report.unrefined_extrema += 1;
                        cur
                    }
                };
                push_turn(value, &mut total);
            }
            prev = cur;
            cur = next;
        }
        push_turn(cur, &mut total);
        report.n_qe = total;
        Ok(report)
    }
}

/// `N(T)` over a list of horizons with the least-squares log-log slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonScaling {
    pub horizons: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
}

/// Measures how `n_qe` grows with the horizon. For `alpha < 1/2` the slope
/// approaches `1 - 2 alpha`; for `alpha > 1/2` it tends to zero.
pub fn horizon_scaling(
    params: &QuantumParams,
    horizons: &[f64],
    sampling: &Sampling,
) -> Result<HorizonScaling> {
    if horizons.len() < 2 {
        return Err(Error::domain("horizon scaling needs at least two horizons"));
    }
    let model = QuantumModel::new(*params)?;
    let values = horizons
        .par_iter()
        .map(|&h| model.n_qe_report(h, sampling).map(|r| r.n_qe))
        .collect::<Result<Vec<_>>>()?;
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate(
            "revival measure vanishes; log-log slope undefined".into(),
        ));
    }
    let slope = loglog_slope(horizons, &values);
    Ok(HorizonScaling {
        horizons: horizons.to_vec(),
        values,
        slope,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_qe_examples() {
        let p = QuantumParams::new(0.4, 1.3, 2.0).unwrap();
        assert_eq!(b_qe(&p, 0.0).unwrap(), 0.0);
        let p = QuantumParams::new(1.0, 1.0, PI / 2.0).unwrap();
        let want = 0.25 * (-2.0f64).exp();
        assert!((b_qe(&p, 1.0).unwrap() - want).abs() < 1e-16);
        let p = QuantumParams::new(0.6, 1.0, 0.0).unwrap();
        assert_eq!(b_qe(&p, 3.7).unwrap(), 0.0);
    }

    #[test]
    fn half_order_composition() {
        let p = QuantumParams::new(0.5, 1.0, 5.0).unwrap();
        let e = 0.427_583_576_155_807_f64;
        let want = 0.25 * e * e * 5f64.sin().powi(2);
        assert!((b_qe(&p, 1.0).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn invalid_params() {
        assert!(QuantumParams::new(0.0, 1.0, 1.0).is_err());
        assert!(QuantumParams::new(0.5, 0.0, 1.0).is_err());
        assert!(QuantumParams::new(0.5, 1.0, -1.0).is_err());
    }

    #[test]
    fn grid_resolves_periods() {
        let p = QuantumParams::new(1.0, 1.0, 1.0).unwrap();
        let tr = sample_bqe(&p, 10.0, &Sampling::with_points_per_period(32)).unwrap();
        assert!(tr.len() as f64 >= 32.0 * 10.0 / (2.0 * PI));
        assert!(tr.values().iter().all(|&v| (0.0..=0.25).contains(&v)));
        assert_eq!(*tr.times().last().unwrap(), 10.0);
    }

    #[test]
    fn grid_without_oscillation() {
        let p = QuantumParams::new(0.5, 2.0, 0.0).unwrap();
        let g = time_grid(&p, 100.0, &Sampling::default()).unwrap();
        assert_eq!(g.points(), 12_800);
        let g = time_grid(&p, 1.0, &Sampling::default()).unwrap();
        assert_eq!(g.points(), 1024);
        let tr = sample_bqe(&p, 1.0, &Sampling::default()).unwrap();
        assert!(tr.values().iter().all(|&v| v == 0.0));
        assert_eq!(n_qe(&p, 50.0, &Sampling::default()).unwrap(), 0.0);
    }

    #[test]
    fn grid_cap_and_resolution_errors() {
        let p = QuantumParams::new(0.5, 1.0, 10.0).unwrap();
        let small = Sampling {
            points_per_period: 64,
            max_points: 1000,
        };
        assert!(matches!(n_qe(&p, 1e4, &small), Err(Error::Resource(_))));
        assert!(matches!(
            n_qe(&p, 10.0, &Sampling::with_points_per_period(8)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn slope_matches_finite_difference_of_b() {
        let m = QuantumModel::new(QuantumParams::new(0.45, 1.2, 3.0).unwrap()).unwrap();
        for &t in &[0.3, 1.7, 6.0, 40.0] {
            let h = 1e-5;
            let fd = (m.b_qe(t + h).unwrap() - m.b_qe(t - h).unwrap()) / (2.0 * h);
            let an = m.slope(t).unwrap();
            assert!((fd - an).abs() < 1e-7, "t={t} fd={fd} an={an}");
        }
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(1e3, 1e5, 5);
        assert_eq!(v[0], 1e3);
        assert_eq!(v[4], 1e5);
        assert!((v[2] - 1e4).abs() < 1e-8);
        assert!(
            (loglog_slope(&v, &v.iter().map(|x| x.powf(0.4)).collect::<Vec<_>>()) - 0.4).abs()
                < 1e-12
        );
    }
}
