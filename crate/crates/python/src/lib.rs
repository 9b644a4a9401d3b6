//! Python bindings: thin wrappers returning plain lists, tuples and dicts.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use infoflow::backflow::backflow_functional;
use infoflow::classical::{self, Generator3, MemoryConfig, ProbTrajectory, SimplexPoint};
use infoflow::info;
use infoflow::mlfunc::{self, MlQuery};
use infoflow::quantum::{self, QuantumParams, Sampling};
use infoflow::sweeps::{self, Metric, SimplexMapSpec};
use infoflow::Trajectory;

create_exception!(pyinfoflow, InfoflowError, PyValueError);

fn err(e: infoflow::Error) -> PyErr {
    InfoflowError::new_err(format!("{}: {}", e.category(), e))
}

type Res<T> = PyResult<T>;

fn point(p: [f64; 3]) -> Res<SimplexPoint> {
    SimplexPoint::new(p).map_err(err)
}

fn rows(t: &ProbTrajectory) -> Vec<[f64; 3]> {
    t.states().iter().map(|s| *s.as_array()).collect()
}

/// Three-state rate matrix, `K[i][j]` = rate `j -> i`.
#[pyclass(name = "Generator", frozen)]
struct PyGenerator {
    inner: Generator3,
}

#[pymethods]
impl PyGenerator {
    #[new]
    fn new(rows: [[f64; 3]; 3]) -> Res<Self> {
        Ok(Self {
            inner: Generator3::from_rows(rows).map_err(err)?,
        })
    }

    #[staticmethod]
    fn reference() -> Self {
        Self {
            inner: Generator3::reference(),
        }
    }

    #[staticmethod]
    fn symmetric(rate: f64) -> Res<Self> {
        Ok(Self {
            inner: Generator3::symmetric_uniform(rate).map_err(err)?,
        })
    }

    #[getter]
    fn rates(&self) -> [[f64; 3]; 3] {
        let k = self.inner.rates();
        [0, 1, 2].map(|i| [k[(i, 0)], k[(i, 1)], k[(i, 2)]])
    }

    #[getter]
    fn pi(&self) -> [f64; 3] {
        *self.inner.pi().as_array()
    }
}

fn memory(
    kind: &str,
    gamma: Option<f64>,
    alpha: Option<f64>,
    n_traj: Option<usize>,
    seed: Option<u64>,
) -> Res<MemoryConfig> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| InfoflowError::new_err(format!("usage: `{kind}` needs {name}")))
    };
    let m = match kind {
        "markov" => MemoryConfig::Markov {},
        "gme" | "gme_exponential" => MemoryConfig::GmeExponential {
            gamma: need(gamma, "gamma")?,
        },
        "erlang2" | "erlang2_embedded" => MemoryConfig::Erlang2Embedded {
            phase_start: Default::default(),
        },
        "erlang2_mc" | "erlang2_montecarlo" => MemoryConfig::Erlang2MonteCarlo {
            n_traj: n_traj.unwrap_or(100_000),
            seed: seed.unwrap_or(0),
        },
        "fractional" => MemoryConfig::Fractional {
            alpha: need(alpha, "alpha")?,
        },
        other => {
            return Err(InfoflowError::new_err(format!(
                "usage: unknown model `{other}`"
            )))
        }
    };
    m.validate().map_err(err)?;
    Ok(m)
}

#[pyfunction]
#[pyo3(signature = (alpha, x, tol = mlfunc::DEFAULT_TOL))]
fn ml_neg(alpha: f64, x: f64, tol: f64) -> Res<f64> {
    mlfunc::ml_neg(&MlQuery::new(alpha, x).with_tol(tol)).map_err(err)
}

/// `E_alpha(-(lambda t)^alpha)`.
#[pyfunction]
fn ml_envelope(alpha: f64, lam: f64, t: f64) -> Res<f64> {
    mlfunc::ml_envelope(alpha, lam, t).map_err(err)
}

#[pyfunction]
fn b_qe(alpha: f64, lam: f64, omega: f64, t: f64) -> Res<f64> {
    let p = QuantumParams::new(alpha, lam, omega).map_err(err)?;
    quantum::b_qe(&p, t).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (alpha, lam, omega, horizon, ppp = quantum::DEFAULT_POINTS_PER_PERIOD))]
fn sample_bqe(
    alpha: f64,
    lam: f64,
    omega: f64,
    horizon: f64,
    ppp: usize,
) -> Res<(Vec<f64>, Vec<f64>)> {
    let p = QuantumParams::new(alpha, lam, omega).map_err(err)?;
    let t =
        quantum::sample_bqe(&p, horizon, &Sampling::with_points_per_period(ppp)).map_err(err)?;
    Ok((t.times().to_vec(), t.values().to_vec()))
}

#[pyfunction]
#[pyo3(signature = (alpha, lam, omega, horizon, ppp = quantum::DEFAULT_POINTS_PER_PERIOD))]
fn n_qe(alpha: f64, lam: f64, omega: f64, horizon: f64, ppp: usize) -> Res<f64> {
    let p = QuantumParams::new(alpha, lam, omega).map_err(err)?;
    quantum::n_qe(&p, horizon, &Sampling::with_points_per_period(ppp)).map_err(err)
}

/// Returns `(values, loglog_slope)`.
#[pyfunction]
#[pyo3(signature = (alpha, lam, omega, horizons, ppp = quantum::DEFAULT_POINTS_PER_PERIOD))]
fn horizon_scaling(
    alpha: f64,
    lam: f64,
    omega: f64,
    horizons: Vec<f64>,
    ppp: usize,
) -> Res<(Vec<f64>, f64)> {
    let p = QuantumParams::new(alpha, lam, omega).map_err(err)?;
    let s = quantum::horizon_scaling(&p, &horizons, &Sampling::with_points_per_period(ppp))
        .map_err(err)?;
    Ok((s.values, s.slope))
}

/// Returns `(times, probabilities, standard_errors or None)`.
#[pyfunction]
#[pyo3(signature = (gen, kind, p0, horizon, steps, gamma = None, alpha = None, n_traj = None, seed = None))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn propagate(
    gen: &PyGenerator,
    kind: &str,
    p0: [f64; 3],
    horizon: f64,
    steps: usize,
    gamma: Option<f64>,
    alpha: Option<f64>,
    n_traj: Option<usize>,
    seed: Option<u64>,
) -> Res<(Vec<f64>, Vec<[f64; 3]>, Option<Vec<[f64; 3]>>)> {
    let m = memory(kind, gamma, alpha, n_traj, seed)?;
    let grid = classical::uniform_grid(horizon, steps).map_err(err)?;
    let out = classical::propagate(&gen.inner, &m, &point(p0)?, &grid).map_err(err)?;
    Ok((grid, rows(&out.trajectory), out.std_err))
}

/// Fractional Adams-Bashforth-Moulton reference solution.
#[pyfunction]
fn caputo_oracle(
    gen: &PyGenerator,
    alpha: f64,
    p0: [f64; 3],
    horizon: f64,
    steps: usize,
) -> Res<(Vec<f64>, Vec<[f64; 3]>)> {
    let grid = classical::uniform_grid(horizon, steps).map_err(err)?;
    let t = classical::caputo_oracle(&gen.inner, alpha, &point(p0)?, &grid).map_err(err)?;
    Ok((grid, rows(&t)))
}

#[pyfunction]
fn shannon_entropy(p: [f64; 3]) -> Res<f64> {
    Ok(info::shannon_entropy(&point(p)?))
}

#[pyfunction]
fn kl_to_stationary(p: [f64; 3], pi: [f64; 3]) -> Res<f64> {
    info::kl_to_stationary(&point(p)?, &point(pi)?).map_err(err)
}

#[pyfunction]
fn entropy_overshoot<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    probs: Vec<[f64; 3]>,
) -> Res<Bound<'py, PyDict>> {
    let states = probs.into_iter().map(point).collect::<Res<Vec<_>>>()?;
    let traj = ProbTrajectory::new(times, states).map_err(err)?;
    let r = info::entropy_overshoot(&traj);
    let d = PyDict::new(py);
    d.set_item("h_max", r.h_max)?;
    d.set_item("t_max", r.t_max)?;
    d.set_item("h_min_after", r.h_min_after)?;
    d.set_item("delta_h", r.delta_h)?;
    Ok(d)
}

/// Returns a dict with `n_i`, `intervals` as `(t_start, t_end, rise)`,
/// `epsilon` and `total_fall`.
#[pyfunction]
#[pyo3(signature = (times, values, epsilon = 0.0))]
fn backflow<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    epsilon: f64,
) -> Res<Bound<'py, PyDict>> {
    let traj = Trajectory::new(times, values).map_err(err)?;
    let r = backflow_functional(&traj, epsilon);
    let d = PyDict::new(py);
    d.set_item("n_i", r.n_i)?;
    d.set_item(
        "intervals",
        r.intervals
            .iter()
            .map(|i| (i.t_start, i.t_end, i.rise))
            .collect::<Vec<_>>(),
    )?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("total_fall", r.total_fall)?;
    Ok(d)
}

/// `N_qe` grid as a list of rows over `alphas`.
#[pyfunction]
#[pyo3(signature = (alphas, ratios, horizon = quantum::DEFAULT_HORIZON_LAMBDA_UNITS, ppp = quantum::DEFAULT_POINTS_PER_PERIOD))]
fn quantum_phase_diagram(
    alphas: Vec<f64>,
    ratios: Vec<f64>,
    horizon: f64,
    ppp: usize,
) -> Res<Vec<Vec<f64>>> {
    let g = sweeps::quantum_phase_diagram(
        &alphas,
        &ratios,
        horizon,
        &Sampling::with_points_per_period(ppp),
    )
    .map_err(err)?;
    Ok((0..alphas.len())
        .map(|i| {
            g.row(i)
                .into_iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect()
        })
        .collect())
}

/// Metric over the barycentric lattice, rows `p1 = i/n`, columns `p2 = j/n`;
/// off-simplex cells are NaN.
#[pyfunction]
#[pyo3(signature = (gen, kind, metric, resolution, horizon, steps, gamma = None, alpha = None, n_traj = None, seed = None, include_boundary = true))]
#[allow(clippy::too_many_arguments)]
fn simplex_map(
    gen: &PyGenerator,
    kind: &str,
    metric: &str,
    resolution: usize,
    horizon: f64,
    steps: usize,
    gamma: Option<f64>,
    alpha: Option<f64>,
    n_traj: Option<usize>,
    seed: Option<u64>,
    include_boundary: bool,
) -> Res<Vec<Vec<f64>>> {
    let spec = SimplexMapSpec {
        memory: memory(kind, gamma, alpha, n_traj, seed)?,
        metric: metric.parse::<Metric>().map_err(err)?,
        resolution,
        horizon,
        steps,
        include_boundary,
    };
    let g = sweeps::simplex_map(&gen.inner, &spec).map_err(err)?;
    Ok((0..g.axis1.len())
        .map(|i| {
            g.row(i)
                .into_iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect()
        })
        .collect())
}

/// `(alpha_midpoint, slope)` of the most negative forward difference.
#[pyfunction]
fn steepest_decline(x: Vec<f64>, y: Vec<f64>) -> Option<(f64, f64)> {
    sweeps::steepest_decline(&x, &y).map(|d| (d.x, d.slope))
}

#[pymodule]
fn pyinfoflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfoflowError", m.py().get_type::<InfoflowError>())?;
    m.add_class::<PyGenerator>()?;
    m.add_function(wrap_pyfunction!(ml_neg, m)?)?;
    m.add_function(wrap_pyfunction!(ml_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(b_qe, m)?)?;
    m.add_function(wrap_pyfunction!(sample_bqe, m)?)?;
    m.add_function(wrap_pyfunction!(n_qe, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(caputo_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(kl_to_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_overshoot, m)?)?;
    m.add_function(wrap_pyfunction!(backflow, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_phase_diagram, m)?)?;
    m.add_function(wrap_pyfunction!(simplex_map, m)?)?;
    m.add_function(wrap_pyfunction!(steepest_decline, m)?)?;
    Ok(())
}
