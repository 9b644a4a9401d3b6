//! Parameter sweeps: quantum phase diagrams, simplex maps of the classical
//! metrics, fractional alpha sweeps and boundary extraction.
//!
//! Every cell is an independent pure computation. Cells are evaluated in
//! parallel and written back by index, so results never depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::backflow::backflow_functional;
use crate::classical::{
    propagate, uniform_grid, Generator3, MemoryConfig, ProbTrajectory, Propagated, SimplexPoint,
    TransferPlan,
};
use crate::error::{Error, Result};
use crate::info::{entropy_overshoot, kl_to_stationary, shannon_entropy, ZERO_PROBABILITY};
use crate::quantum::{QuantumModel, QuantumParams, Sampling};
use crate::trajectory::Trajectory;

/// Named, ordered coordinate values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(name: impl Into<String>, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| {
                    if i + 1 == n {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        };
        Self::new(name, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Scalar field over `axis1 x axis2`, row-major. Cells outside the domain
/// (e.g. off-simplex barycentric pairs) are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values: Vec<Option<f64>>,
    pub meta: Map<String, Value>,
}

impl PhaseGrid {
    pub fn new(
        axis1: Axis,
        axis2: Axis,
        values: Vec<Option<f64>>,
        meta: Map<String, Value>,
    ) -> Result<Self> {
        if values.len() != axis1.len() * axis2.len() {
            return Err(Error::domain(format!(
                "grid has {} values for a {}x{} axis product",
                values.len(),
                axis1.len(),
                axis2.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid contains a non-finite value".into()));
        }
        Ok(Self {
            axis1,
            axis2,
            values,
            meta,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.axis2.len() + j]
    }

    /// Values along `axis1` at fixed `axis2` index.
    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        (0..self.axis1.len()).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Option<f64>> {
        (0..self.axis2.len()).map(|j| self.get(i, j)).collect()
    }

    pub fn finite_range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .flatten()
            .fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}

/// Barycentric lattice `(i/n, j/n, k/n)` with `i + j + k = n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexGrid {
    pub resolution: usize,
    pub include_boundary: bool,
}

impl SimplexGrid {
    pub fn new(resolution: usize, include_boundary: bool) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::domain("simplex resolution must be >= 1"));
        }
        Ok(Self {
            resolution,
            include_boundary,
        })
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let n = self.resolution;
        if i + j > n {
            return false;
        }
        self.include_boundary || (i > 0 && j > 0 && i + j < n)
    }

    pub fn point(&self, i: usize, j: usize) -> Result<SimplexPoint> {
        let n = self.resolution as f64;
        let k = self.resolution - i - j;
        SimplexPoint::new([i as f64 / n, j as f64 / n, k as f64 / n])
    }

    /// Lattice indices `(i, j)` with the implied `k = n - i - j`.
    pub fn indices(&self) -> Vec<(usize, usize)> {
        let n = self.resolution;
        (0..=n)
            .flat_map(|i| (0..=n - i).map(move |j| (i, j)))
            .filter(|&(i, j)| self.contains(i, j))
            .collect()
    }

    pub fn points(&self) -> Result<Vec<SimplexPoint>> {
        self.indices()
            .into_iter()
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.indices().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scalar summary of a classical trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Entropy overshoot `H_max - min_{t >= t_max} H`.
    DeltaH,
    /// Backflow of `I = H`.
    NH,
    /// Backflow of `I = +D_KL(p || pi)`.
    NDkl,
    /// Backflow of `I = -D_KL(p || pi)`.
    NNegDkl,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::DeltaH => "delta_h",
            Metric::NH => "n_h",
            Metric::NDkl => "n_dkl",
            Metric::NNegDkl => "n_neg_dkl",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta_h" => Ok(Metric::DeltaH),
            "n_h" => Ok(Metric::NH),
            "n_dkl" => Ok(Metric::NDkl),
            "n_neg_dkl" => Ok(Metric::NNegDkl),
            _ => Err(Error::domain(format!(
                "unknown metric `{s}` (expected delta_h, n_h, n_dkl or n_neg_dkl)"
            ))),
        }
    }
}

/// Delta-method standard error of a plug-in functional with gradient `g`.
fn plugin_standard_error(p: &SimplexPoint, g: [f64; 3], n: usize) -> f64 {
    let p = p.as_array();
    let mean: f64 = (0..3).map(|i| p[i] * g[i]).sum();
    let second: f64 = (0..3).map(|i| p[i] * g[i] * g[i]).sum();
    ((second - mean * mean).max(0.0) / n as f64).sqrt()
}

fn observable(metric: Metric, p: &SimplexPoint, pi: &SimplexPoint) -> Result<f64> {
    match metric {
        Metric::DeltaH | Metric::NH => Ok(shannon_entropy(p)),
        Metric::NDkl => kl_to_stationary(p, pi),
        Metric::NNegDkl => Ok(-kl_to_stationary(p, pi)?),
    }
}

fn observable_gradient(metric: Metric, p: &SimplexPoint, pi: &SimplexPoint) -> [f64; 3] {
    let p = p.as_array();
    let pi = pi.as_array();
    let mut g = [0.0; 3];
    for i in 0..3 {
        if p[i] >= ZERO_PROBABILITY {
            g[i] = match metric {
                Metric::DeltaH | Metric::NH => -(p[i].ln() + 1.0),
                Metric::NDkl => (p[i] / pi[i]).ln() + 1.0,
                Metric::NNegDkl => -((p[i] / pi[i]).ln() + 1.0),
            };
        }
    }
    g
}

/// Outcome of [`evaluate_metric`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    /// Rise threshold applied to the backflow metrics.
    pub epsilon: f64,
}

/// Evaluates `metric` on a propagated path. Monte Carlo paths use
/// `epsilon = 3 x` the pooled standard error of the observable.
pub fn evaluate_metric(
    metric: Metric,
    path: &Propagated,
    pi: &SimplexPoint,
) -> Result<MetricValue> {
    let traj = &path.trajectory;
    if metric == Metric::DeltaH {
        return Ok(MetricValue {
            value: entropy_overshoot(traj).delta_h,
            epsilon: 0.0,
        });
    }
    let epsilon = match path.n_traj {
        Some(n) => {
            let var: f64 = traj
                .states()
                .iter()
                .map(|p| plugin_standard_error(p, observable_gradient(metric, p, pi), n).powi(2))
                .sum::<f64>()
                / traj.len() as f64;
            3.0 * var.sqrt()
        }
        None => 0.0,
    };
    let values = traj
        .states()
        .iter()
        .map(|p| observable(metric, p, pi))
        .collect::<Result<Vec<_>>>()?;
    let series = Trajectory::new(traj.times().to_vec(), values)?;
    Ok(MetricValue {
        value: backflow_functional(&series, epsilon).n_i,
        epsilon,
    })
}

fn deterministic_metric(metric: Metric, traj: ProbTrajectory, pi: &SimplexPoint) -> Result<f64> {
    let path = Propagated {
        trajectory: traj,
        std_err: None,
        n_traj: None,
    };
    Ok(evaluate_metric(metric, &path, pi)?.value)
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of cell `(i, j)` derived from the sweep seed.
pub fn cell_seed(seed: u64, i: usize, j: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ i as u64) ^ j as u64)
}

fn cell_error(grid_a1: &Axis, grid_a2: &Axis, i: usize, j: usize, e: Error) -> Error {
    Error::Cell {
        row: i,
        col: j,
        axis1_value: grid_a1.values[i],
        axis2_value: grid_a2.values[j],
        source: Box::new(e),
    }
}

/// Evaluates `f` on every `(i, j)` in parallel; the first failing cell in
/// row-major order is reported with its coordinates.
fn fill_cells<F>(axis1: &Axis, axis2: &Axis, f: F) -> Result<Vec<Option<f64>>>
where
    F: Fn(usize, usize) -> Result<Option<f64>> + Sync,
{
    let n2 = axis2.len();
    let results: Vec<Result<Option<f64>>> = (0..axis1.len() * n2)
        .into_par_iter()
        .map(|c| f(c / n2, c % n2))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(c, r)| r.map_err(|e| cell_error(axis1, axis2, c / n2, c % n2, e)))
        .collect()
}

/// `N_qe` over `(alpha, omega / lambda)` with `lambda = 1`.
pub fn quantum_phase_diagram(
    alphas: &[f64],
    ratios: &[f64],
    horizon: f64,
    sampling: &Sampling,
) -> Result<PhaseGrid> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    for &a in alphas {
        crate::mlfunc::validate_alpha(a)?;
    }
    if let Some(r) = ratios.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::domain(format!("omega/lambda must be >= 0, got {r}")));
    }
    let axis1 = Axis::new("alpha", alphas.to_vec());
    let axis2 = Axis::new("omega_over_lambda", ratios.to_vec());
    let models = alphas
        .iter()
        .map(|&a| QuantumModel::new(QuantumParams::new(a, 1.0, 0.0)?))
        .collect::<Result<Vec<_>>>()?;
    let values = fill_cells(&axis1, &axis2, |i, j| {
        let model = models[i].with_params(QuantumParams::new(alphas[i], 1.0, ratios[j])?)?;
        model.n_qe_report(horizon, sampling).map(|r| Some(r.n_qe))
    })?;
    let mut meta = Map::new();
    meta.insert("model".into(), json!("quantum"));
    meta.insert("metric".into(), json!("n_qe"));
    meta.insert("lambda".into(), json!(1.0));
    meta.insert("horizon".into(), json!(horizon));
    meta.insert(
        "points_per_period".into(),
        json!(sampling.points_per_period),
    );
    meta.insert("resolution".into(), json!([alphas.len(), ratios.len()]));
    meta.insert("epsilon".into(), json!(0.0));
    PhaseGrid::new(axis1, axis2, values, meta)
}

/// Simplex map settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexMapSpec {
    pub memory: MemoryConfig,
    pub metric: Metric,
    pub resolution: usize,
    pub horizon: f64,
    pub steps: usize,
    pub include_boundary: bool,
}

/// `metric(p0)` over the barycentric lattice. The grid axes are `p1 = i / n`
/// and `p2 = j / n`; cells with `i + j > n` are `None`.
pub fn simplex_map(gen: &Generator3, spec: &SimplexMapSpec) -> Result<PhaseGrid> {
    if spec.resolution < 4 {
        return Err(Error::domain(format!(
            "simplex resolution must be >= 4, got {}",
            spec.resolution
        )));
    }
    spec.memory.validate()?;
    let lattice = SimplexGrid::new(spec.resolution, spec.include_boundary)?;
    let grid = uniform_grid(spec.horizon, spec.steps)?;
    let n = spec.resolution;
    let coords: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let axis1 = Axis::new("p1", coords.clone());
    let axis2 = Axis::new("p2", coords);
    let pi = gen.pi();

    let plan = if spec.memory.is_stochastic() {
        None
    } else {
        Some(TransferPlan::for_memory(gen, &spec.memory, &grid)?)
    };
    let values = fill_cells(&axis1, &axis2, |i, j| {
        if !lattice.contains(i, j) {
            return Ok(None);
        }
        let p0 = lattice.point(i, j)?;
        let path = match (&plan, &spec.memory) {
            (Some(plan), _) => Propagated {
                trajectory: plan.apply(&p0)?,
                std_err: None,
                n_traj: None,
            },
            (None, MemoryConfig::Erlang2MonteCarlo { n_traj, seed }) => {
                let memory = MemoryConfig::Erlang2MonteCarlo {
                    n_traj: *n_traj,
                    seed: cell_seed(*seed, i, j),
                };
                propagate(gen, &memory, &p0, &grid)?
            }
            (None, _) => unreachable!("deterministic memory always has a plan"),
        };
        Ok(Some(evaluate_metric(spec.metric, &path, pi)?.value))
    })?;

    let mut meta = Map::new();
    meta.insert("model".into(), json!(spec.memory.kind_name()));
    meta.insert(
        "memory".into(),
        serde_json::to_value(&spec.memory).expect("serializable"),
    );
    meta.insert("metric".into(), json!(spec.metric.name()));
    meta.insert("horizon".into(), json!(spec.horizon));
    meta.insert("steps".into(), json!(spec.steps));
    meta.insert("resolution".into(), json!(spec.resolution));
    meta.insert("include_boundary".into(), json!(spec.include_boundary));
    meta.insert("generator".into(), json!(generator_rows(gen)));
    match spec.memory {
        MemoryConfig::Erlang2MonteCarlo { seed, n_traj } => {
            meta.insert("seed".into(), json!(seed));
            meta.insert("n_traj".into(), json!(n_traj));
            meta.insert(
                "epsilon".into(),
                json!("3 x pooled standard error per cell"),
            );
        }
        _ => {
            meta.insert("epsilon".into(), json!(0.0));
        }
    }
    PhaseGrid::new(axis1, axis2, values, meta)
}

fn generator_rows(gen: &Generator3) -> Vec<[f64; 3]> {
    let k = gen.rates();
    (0..3).map(|i| [k[(i, 0)], k[(i, 1)], k[(i, 2)]]).collect()
}

/// Fractional sweep settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweepSpec {
    pub alphas: Vec<f64>,
    pub initial_states: Vec<SimplexPoint>,
    pub metric: Metric,
    /// Increasing horizons; the grid value uses the last one.
    pub horizons: Vec<f64>,
    /// Time steps per unit time.
    pub steps_per_unit: usize,
}

/// Metric growth with the horizon for one `(alpha, p0)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonProfile {
    pub alpha: f64,
    pub initial_state: usize,
    pub horizons: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    /// `axis1 = alpha`, `axis2 = initial-state index`.
    pub grid: PhaseGrid,
    pub profiles: Vec<HorizonProfile>,
}

/// Fractional relaxation metric over `alpha` and initial states.
pub fn classical_alpha_sweep(gen: &Generator3, spec: &AlphaSweepSpec) -> Result<AlphaSweep> {
    if spec.alphas.is_empty() || spec.initial_states.is_empty() || spec.horizons.is_empty() {
        return Err(Error::domain(
            "alpha sweep needs alphas, initial states and horizons",
        ));
    }
    if spec.horizons.windows(2).any(|w| w[1] <= w[0]) || !(spec.horizons[0] > 0.0) {
        return Err(Error::domain("horizons must be positive and increasing"));
    }
    if spec.steps_per_unit == 0 {
        return Err(Error::domain("steps_per_unit must be >= 1"));
    }
    let horizon = *spec.horizons.last().expect("non-empty");
    let steps = (horizon * spec.steps_per_unit as f64).ceil() as usize;
    let grid = uniform_grid(horizon, steps)?;
    let axis1 = Axis::new("alpha", spec.alphas.clone());
    let axis2 = Axis::new(
        "initial_state",
        (0..spec.initial_states.len()).map(|i| i as f64).collect(),
    );
    let pi = gen.pi();
    let plans = spec
        .alphas
        .par_iter()
        .map(|&a| TransferPlan::fractional(gen, a, &grid))
        .collect::<Vec<_>>();
    let plans = plans
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.map_err(|e| cell_error(&axis1, &axis2, i, 0, e)))
        .collect::<Result<Vec<_>>>()?;

    let n2 = spec.initial_states.len();
    let cells: Vec<Result<Vec<f64>>> = (0..spec.alphas.len() * n2)
        .into_par_iter()
        .map(|c| {
            let traj = plans[c / n2].apply(&spec.initial_states[c % n2])?;
            spec.horizons
                .iter()
                .map(|&h| {
                    let end = traj.times().partition_point(|&t| t <= h * (1.0 + 1e-12));
                    let prefix = ProbTrajectory::new(
                        traj.times()[..end].to_vec(),
                        traj.states()[..end].to_vec(),
                    )?;
                    deterministic_metric(spec.metric, prefix, pi)
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(cells.len());
    let mut profiles = Vec::with_capacity(cells.len());
    for (c, r) in cells.into_iter().enumerate() {
        let (i, j) = (c / n2, c % n2);
        let growth = r.map_err(|e| cell_error(&axis1, &axis2, i, j, e))?;
        values.push(Some(*growth.last().expect("non-empty")));
        profiles.push(HorizonProfile {
            alpha: spec.alphas[i],
            initial_state: j,
            horizons: spec.horizons.clone(),
            values: growth,
        });
    }

    let mut meta = Map::new();
    meta.insert("model".into(), json!("fractional"));
    meta.insert("metric".into(), json!(spec.metric.name()));
    meta.insert("horizon".into(), json!(horizon));
    meta.insert("horizons".into(), json!(spec.horizons));
    meta.insert("steps".into(), json!(steps));
    meta.insert("initial_states".into(), json!(spec.initial_states));
    meta.insert("generator".into(), json!(generator_rows(gen)));
    meta.insert("epsilon".into(), json!(0.0));
    Ok(AlphaSweep {
        grid: PhaseGrid::new(axis1, axis2, values, meta)?,
        profiles,
    })
}

/// Location and slope of the most negative forward difference of a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decline {
    /// Midpoint of the steepest segment.
    pub x: f64,
    pub slope: f64,
}

/// Steepest decline of `y(x)`; `None` when the profile never decreases.
pub fn steepest_decline(x: &[f64], y: &[f64]) -> Option<Decline> {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| Decline {
            x: 0.5 * (xs[0] + xs[1]),
            slope: (ys[1] - ys[0]) / (xs[1] - xs[0]),
        })
        .filter(|d| d.slope < 0.0)
        .min_by(|a, b| a.slope.total_cmp(&b.slope))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Per `axis2` value, the `axis1` location of the largest `|dV/daxis1|`.
    Gradient,
    /// Crossings of `level_fraction * max(V)` along `axis1`.
    Level,
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(BoundaryMode::Gradient),
            "level" => Ok(BoundaryMode::Level),
            _ => Err(Error::domain(format!("unknown boundary mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub axis2: f64,
    pub axis1: f64,
    /// `|dV/daxis1|` at the point (gradient mode) or the level (level mode).
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub mode: BoundaryMode,
    pub points: Vec<BoundaryPoint>,
    /// Largest gradient magnitude over the grid and its location.
    pub sharpness: f64,
    pub sharpest_at: (f64, f64),
}

impl Boundary {
    pub fn mean_axis1(&self) -> Option<f64> {
        if self.points.is_empty() {
            None
        } else {
            Some(self.points.iter().map(|p| p.axis1).sum::<f64>() / self.points.len() as f64)
        }
    }
}

/// Central differences in the interior, one-sided at the ends; `None` where
/// a needed neighbour is missing.
fn gradient_along(x: &[f64], v: &[Option<f64>]) -> Vec<Option<f64>> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = if i == 0 {
                (0, 1)
            } else if i + 1 == n {
                (n - 2, n - 1)
            } else if v[i - 1].is_some() && v[i + 1].is_some() {
                (i - 1, i + 1)
            } else if v[i + 1].is_some() {
                (i, i + 1)
            } else {
                (i - 1, i)
            };
            if n < 2 {
                return None;
            }
            Some((v[hi]? - v[lo]?) / (x[hi] - x[lo]))
        })
        .collect()
}

/// Extracts a boundary curve `axis1(axis2)` from a grid.
pub fn boundary_extract(
    grid: &PhaseGrid,
    mode: BoundaryMode,
    level_fraction: f64,
) -> Result<Boundary> {
    let (lo, hi) = grid
        .finite_range()
        .ok_or_else(|| Error::Degenerate("grid has no values".into()))?;
    if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
        return Err(Error::Degenerate(format!("grid is constant ({lo})")));
    }
    if grid.axis1.len() < 2 {
        return Err(Error::Degenerate("axis1 needs at least two values".into()));
    }
    if mode == BoundaryMode::Level && !(level_fraction > 0.0 && level_fraction < 1.0) {
        return Err(Error::domain(format!(
            "level_fraction must lie in (0, 1), got {level_fraction}"
        )));
    }
    let x = &grid.axis1.values;
    let mut points = Vec::new();
    let mut sharpness = 0.0;
    let mut sharpest_at = (x[0], grid.axis2.values[0]);
    let level = level_fraction * hi;
    for (j, &y) in grid.axis2.values.iter().enumerate() {
        let col = grid.column(j);
        let grad = gradient_along(x, &col);
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in grad.iter().enumerate() {
            if let Some(g) = g {
                let g = g.abs();
                if best.is_none_or(|(_, b)| g > b) {
                    best = Some((i, g));
                }
            }
        }
        if let Some((i, g)) = best {
            if g > sharpness {
                sharpness = g;
                sharpest_at = (x[i], y);
            }
            if mode == BoundaryMode::Gradient && g > 0.0 {
                points.push(BoundaryPoint {
                    axis2: y,
                    axis1: x[i],
                    strength: g,
                });
            }
        }
        if mode == BoundaryMode::Level {
            for i in 0..col.len() - 1 {
                if let (Some(a), Some(b)) = (col[i], col[i + 1]) {
                    if (a - level) * (b - level) < 0.0 || (a == level && b != level) {
                        let f = (level - a) / (b - a);
                        points.push(BoundaryPoint {
                            axis2: y,
                            axis1: x[i] + f * (x[i + 1] - x[i]),
                            strength: level,
                        });
                    }
                }
            }
        }
    }
    Ok(Boundary {
        mode,
        points,
        sharpness,
        sharpest_at,
    })
}
