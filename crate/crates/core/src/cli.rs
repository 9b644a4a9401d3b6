//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE` (TOML, kebab-case keys matching
//! the long flags). Flags override file values and unknown keys are errors.
//! Results go to `--out-dir` (or `$INFOFLOW_OUT_DIR`) as `<command>.csv`,
//! `<command>.json` and optionally `<command>.svg`; without an output
//! directory the CSV is printed to stdout.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::backflow::backflow_functional;
use crate::classical::{
    propagate, uniform_grid, Generator3, MemoryConfig, PhaseStart, SimplexPoint,
};
use crate::error::{Error, Result};
use crate::io;
use crate::mlfunc::{MittagLeffler, MlQuery, DEFAULT_TOL};
use crate::quantum::{
    horizon_scaling, n_qe_report, sample_bqe, QuantumParams, Sampling,
    DEFAULT_HORIZON_LAMBDA_UNITS, DEFAULT_POINTS_PER_PERIOD,
};
use crate::sweeps::{
    boundary_extract, classical_alpha_sweep, quantum_phase_diagram, simplex_map, steepest_decline,
    AlphaSweepSpec, Axis, BoundaryMode, Metric, PhaseGrid, SimplexMapSpec,
};

pub const OUT_DIR_ENV: &str = "INFOFLOW_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "infoflow", version, about = "Information-backflow diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate E_alpha(-x); with --batch, read `alpha,x` lines from stdin.
    Ml(MlArgs),
    /// Sample b_qe(t) on the revival time grid.
    QuantumTraj(QuantumArgs),
    /// Revival measure N_qe, optionally over a list of horizons.
    QuantumNqe(QuantumArgs),
    /// N_qe phase diagram over (alpha, omega/lambda).
    QuantumPhase(QuantumPhaseArgs),
    /// Propagate a three-state distribution.
    ClassicalTraj(ClassicalArgs),
    /// Metric over the probability simplex of initial states.
    ClassicalMap(ClassicalArgs),
    /// Fractional metric over alpha and initial states.
    AlphaSweep(AlphaSweepArgs),
    /// Backflow functional of a (t, I) trace.
    Backflow(BackflowArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ml(_) => "ml",
            Command::QuantumTraj(_) => "quantum-traj",
            Command::QuantumNqe(_) => "quantum-nqe",
            Command::QuantumPhase(_) => "quantum-phase",
            Command::ClassicalTraj(_) => "classical-traj",
            Command::ClassicalMap(_) => "classical-map",
            Command::AlphaSweep(_) => "alpha-sweep",
            Command::Backflow(_) => "backflow",
        }
    }
}

/// Options shared by all subcommands.
#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OutputArgs {
    /// TOML file with the same keys as the long flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to $INFOFLOW_OUT_DIR, else stdout.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write an SVG heatmap (grid commands).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MlArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub batch: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct QuantumArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Horizon in units of 1/lambda.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Samples per oscillation period.
    #[arg(long)]
    pub ppp: Option<usize>,
    /// Comma-separated horizons (in 1/lambda) for a log-log scaling fit.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct QuantumPhaseArgs {
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub alpha_points: Option<usize>,
    #[arg(long)]
    pub ratio_min: Option<f64>,
    #[arg(long)]
    pub ratio_max: Option<f64>,
    #[arg(long)]
    pub ratio_points: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub ppp: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ClassicalArgs {
    /// markov, gme, erlang2, erlang2-mc or fractional.
    #[arg(long)]
    pub model: Option<String>,
    /// Generator file: three rows of three rates, K_ij = rate j -> i.
    #[arg(long)]
    pub k_file: Option<PathBuf>,
    /// Initial distribution `a,b,c` (classical-traj).
    #[arg(long)]
    pub p0: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub ntraj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Erlang-2 initial phases: fresh or stationary.
    #[arg(long)]
    pub phase_start: Option<String>,
    /// delta_h, n_h, n_dkl or n_neg_dkl (classical-map).
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_boundary: Option<bool>,
    /// Report information metrics in bits instead of nats.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub bits: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AlphaSweepArgs {
    #[arg(long)]
    pub k_file: Option<PathBuf>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub alpha_points: Option<usize>,
    /// Initial distributions `a,b,c`; repeat the flag for several.
    #[arg(long)]
    pub p0: Option<Vec<String>>,
    #[arg(long)]
    pub metric: Option<String>,
    /// Comma-separated increasing horizons.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<f64>>,
    #[arg(long)]
    pub steps_per_unit: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub bits: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BackflowArgs {
    /// CSV with columns t, I.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, strip_nulls(v)))
                .collect(),
        ),
        other => other,
    }
}

/// Overlays the command-line values on the config file values.
pub fn merge_config<T>(cli: &T, config: Option<&Path>) -> Result<T>
where
    T: Serialize + DeserializeOwned + Clone,
{
    let Some(path) = config else {
        return Ok(cli.clone());
    };
    let text = io::read_file(path)?;
    let file: toml::Table = toml::from_str(&text)
        .map_err(|e| Error::Usage(format!("{}: {}", path.display(), one_line(&e.to_string()))))?;
    let mut merged = serde_json::to_value(file).expect("toml maps to json");
    let over = strip_nulls(serde_json::to_value(cli).expect("serializable args"));
    if let (Value::Object(base), Value::Object(over)) = (&mut merged, over) {
        base.extend(over);
    }
    serde_json::from_value(merged)
        .map_err(|e| Error::Usage(format!("{}: {}", path.display(), one_line(&e.to_string()))))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn required<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Usage(format!("missing required option --{key}")))
}

pub fn parse_simplex_point(s: &str) -> Result<SimplexPoint> {
    let parts = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("--p0: `{x}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    let arr: [f64; 3] = parts.try_into().map_err(|_| {
        Error::Usage(format!(
            "--p0 expects three comma-separated values, got `{s}`"
        ))
    })?;
    SimplexPoint::new(arr)
}

/// Reads a generator file: three rows of three numbers separated by
/// whitespace or commas, `#` starts a comment. `K_ij` is the rate `j -> i`.
/// An all-zero diagonal is filled so that columns sum to zero.
pub fn parse_generator(text: &str, origin: &str) -> Result<Generator3> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::parse(origin, format!("line {}: `{f}` is not a number", n + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let row: [f64; 3] = row
            .try_into()
            .map_err(|_| Error::parse(origin, format!("line {}: expected three rates", n + 1)))?;
        rows.push(row);
    }
    let mut rows: [[f64; 3]; 3] = rows
        .try_into()
        .map_err(|_| Error::parse(origin, "expected three rows"))?;
    if (0..3).all(|i| rows[i][i] == 0.0) {
        for j in 0..3 {
            rows[j][j] = -(0..3).filter(|&i| i != j).map(|i| rows[i][j]).sum::<f64>();
        }
    }
    Generator3::from_rows(rows)
}

/// Prints to stdout; a closed pipe ends output quietly.
fn to_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn load_generator(path: &Option<PathBuf>) -> Result<Generator3> {
    match path {
        Some(p) => parse_generator(&io::read_file(p)?, &p.display().to_string()),
        None => Ok(Generator3::reference()),
    }
}

fn parse_metric(s: &Option<String>) -> Result<Metric> {
    required(s, "metric")?
        .parse()
        .map_err(|e: Error| Error::Usage(format!("--metric: {e}")))
}

fn memory_config(a: &ClassicalArgs) -> Result<MemoryConfig> {
    let model = required(&a.model, "model")?;
    let m = match model.as_str() {
        "markov" => MemoryConfig::Markov {},
        "gme" => MemoryConfig::GmeExponential {
            gamma: required(&a.gamma, "gamma")?,
        },
        "erlang2" => MemoryConfig::Erlang2Embedded {
            phase_start: match a.phase_start.as_deref() {
                None | Some("fresh") => PhaseStart::Fresh,
                Some("stationary") => PhaseStart::Stationary,
                Some(other) => {
                    return Err(Error::Usage(format!(
                        "--phase-start: expected fresh or stationary, got `{other}`"
                    )))
                }
            },
        },
        "erlang2-mc" => MemoryConfig::Erlang2MonteCarlo {
            n_traj: required(&a.ntraj, "ntraj")?,
            seed: required(&a.seed, "seed")?,
        },
        "fractional" => MemoryConfig::Fractional {
            alpha: required(&a.alpha, "alpha")?,
        },
        other => {
            return Err(Error::Usage(format!(
                "--model: expected markov, gme, erlang2, erlang2-mc or fractional, got `{other}`"
            )))
        }
    };
    m.validate()?;
    Ok(m)
}

/// Where and how results are written.
struct Sink {
    command: &'static str,
    out_dir: Option<PathBuf>,
    svg: bool,
    started: Instant,
}

impl Sink {
    fn new(command: &'static str, out: &OutputArgs) -> Self {
        let out_dir = out
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
        Self {
            command,
            out_dir,
            svg: out.svg.unwrap_or(false),
            started: Instant::now(),
        }
    }

    fn path(&self, ext: &str) -> Option<PathBuf> {
        self.out_dir
            .as_ref()
            .map(|d| d.join(format!("{}.{ext}", self.command)))
    }

    /// Writes the CSV (or prints it) and the JSON meta record.
    fn emit<C: Serialize>(&self, csv: &str, config: &C, extra: Map<String, Value>) -> Result<()> {
        match self.path("csv") {
            Some(p) => io::write_file(&p, csv)?,
            None => to_stdout(csv)?,
        }
        if let Some(p) = self.path("json") {
            let mut meta = Map::new();
            meta.insert("command".into(), json!(self.command));
            meta.insert(
                "config".into(),
                strip_nulls(serde_json::to_value(config).expect("serializable config")),
            );
            meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
            meta.insert(
                "wall_time_s".into(),
                json!(self.started.elapsed().as_secs_f64()),
            );
            meta.extend(extra);
            let text = serde_json::to_string_pretty(&Value::Object(meta)).expect("json");
            io::write_file(&p, &(text + "\n"))?;
        }
        Ok(())
    }

    fn emit_grid<C: Serialize>(
        &self,
        grid: &PhaseGrid,
        config: &C,
        mut extra: Map<String, Value>,
        title: &str,
    ) -> Result<()> {
        extra.insert("grid".into(), Value::Object(grid.meta.clone()));
        extra.insert("axis1".into(), json!(grid.axis1.name));
        extra.insert("axis2".into(), json!(grid.axis2.name));
        self.emit(&io::grid_csv(grid), config, extra)?;
        if self.svg {
            match self.path("svg") {
                Some(p) => io::write_file(&p, &io::grid_svg(grid, title))?,
                None => log::warn!("--svg ignored without an output directory"),
            }
        }
        Ok(())
    }
}

fn fill<T: Copy>(slot: &mut Option<T>, default: T) -> T {
    *slot.get_or_insert(default)
}

fn run_ml(a: MlArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let tol = fill(&mut a.tol, DEFAULT_TOL);
    let sink = Sink::new("ml", &a.output);
    let mut rows = String::from("alpha,x,value,regime\n");
    let mut eval = |alpha: f64, x: f64| -> Result<()> {
        MlQuery::new(alpha, x).with_tol(tol).validate()?;
        let (v, regime) = MittagLeffler::new(alpha)?.neg_with_regime(x, tol)?;
        rows.push_str(&format!(
            "{},{},{},{}\n",
            io::fmt_f64(alpha),
            io::fmt_f64(x),
            io::fmt_f64(v),
            format!("{regime:?}").to_lowercase()
        ));
        Ok(())
    };
    if a.batch.unwrap_or(false) {
        let mut input = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut input)
            .map_err(|e| Error::io("<stdin>", e))?;
        for (n, line) in input.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::parse("<stdin>", format!("line {}: `{s}` is not a number", n + 1))
                })
            };
            if f.len() != 2 {
                return Err(Error::parse(
                    "<stdin>",
                    format!("line {}: expected `alpha,x`", n + 1),
                ));
            }
            eval(parse(f[0])?, parse(f[1])?)?;
        }
    } else {
        eval(required(&a.alpha, "alpha")?, required(&a.x, "x")?)?;
    }
    sink.emit(&rows, &a, Map::new())
}

fn quantum_setup(a: &mut QuantumArgs) -> Result<(QuantumParams, f64, Sampling)> {
    fill(&mut a.lambda, 1.0);
    fill(&mut a.horizon, DEFAULT_HORIZON_LAMBDA_UNITS);
    fill(&mut a.ppp, DEFAULT_POINTS_PER_PERIOD);
    let params = QuantumParams::new(
        required(&a.alpha, "alpha")?,
        a.lambda.expect("filled"),
        required(&a.omega, "omega")?,
    )?;
    let horizon = a.horizon.expect("filled") / params.lambda;
    Ok((
        params,
        horizon,
        Sampling::with_points_per_period(a.ppp.expect("filled")),
    ))
}

fn run_quantum_traj(a: QuantumArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let (params, horizon, sampling) = quantum_setup(&mut a)?;
    let sink = Sink::new("quantum-traj", &a.output);
    let traj = sample_bqe(&params, horizon, &sampling)?;
    sink.emit(&io::trajectory_csv(&traj, "b_qe"), &a, Map::new())
}

fn run_quantum_nqe(a: QuantumArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let (params, horizon, sampling) = quantum_setup(&mut a)?;
    let sink = Sink::new("quantum-nqe", &a.output);
    let mut extra = Map::new();
    let csv = match &a.horizons {
        Some(hs) => {
            let hs: Vec<f64> = hs.iter().map(|h| h / params.lambda).collect();
            let s = horizon_scaling(&params, &hs, &sampling)?;
            extra.insert("loglog_slope".into(), json!(s.slope));
            let mut csv = String::from("horizon,n_qe\n");
            for (h, v) in s.horizons.iter().zip(&s.values) {
                csv.push_str(&format!("{},{}\n", io::fmt_f64(*h), io::fmt_f64(*v)));
            }
            csv
        }
        None => {
            let r = n_qe_report(&params, horizon, &sampling)?;
            extra.insert("report".into(), serde_json::to_value(&r).expect("json"));
            format!(
                "horizon,n_qe\n{},{}\n",
                io::fmt_f64(r.horizon),
                io::fmt_f64(r.n_qe)
            )
        }
    };
    sink.emit(&csv, &a, extra)
}

fn run_quantum_phase(a: QuantumPhaseArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let alphas = Axis::linspace(
        "alpha",
        fill(&mut a.alpha_min, 0.1),
        fill(&mut a.alpha_max, 1.0),
        fill(&mut a.alpha_points, 33),
    );
    let ratios = Axis::linspace(
        "omega_over_lambda",
        fill(&mut a.ratio_min, 0.5),
        fill(&mut a.ratio_max, 20.0),
        fill(&mut a.ratio_points, 33),
    );
    let horizon = fill(&mut a.horizon, DEFAULT_HORIZON_LAMBDA_UNITS);
    let sampling = Sampling::with_points_per_period(fill(&mut a.ppp, DEFAULT_POINTS_PER_PERIOD));
    let sink = Sink::new("quantum-phase", &a.output);
    let grid = quantum_phase_diagram(&alphas.values, &ratios.values, horizon, &sampling)?;
    let mut extra = Map::new();
    if let Ok(b) = boundary_extract(&grid, BoundaryMode::Gradient, 0.5) {
        extra.insert("boundary".into(), serde_json::to_value(&b).expect("json"));
        extra.insert("boundary_mean_alpha".into(), json!(b.mean_axis1()));
    }
    sink.emit_grid(&grid, &a, extra, "N_qe")
}

fn info_scale(bits: bool) -> f64 {
    if bits {
        1.0 / std::f64::consts::LN_2
    } else {
        1.0
    }
}

fn scaled(grid: PhaseGrid, scale: f64) -> Result<PhaseGrid> {
    if scale == 1.0 {
        return Ok(grid);
    }
    let values = grid.values.iter().map(|v| v.map(|x| x * scale)).collect();
    let mut meta = grid.meta;
    meta.insert("units".into(), json!("bits"));
    PhaseGrid::new(grid.axis1, grid.axis2, values, meta)
}

fn run_classical_traj(a: ClassicalArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let memory = memory_config(&a)?;
    let gen = load_generator(&a.k_file)?;
    let p0 = parse_simplex_point(&required(&a.p0, "p0")?)?;
    let grid = uniform_grid(fill(&mut a.horizon, 10.0), fill(&mut a.steps, 1000))?;
    let sink = Sink::new("classical-traj", &a.output);
    let out = propagate(&gen, &memory, &p0, &grid)?;
    let mut extra = Map::new();
    extra.insert(
        "memory".into(),
        serde_json::to_value(&memory).expect("json"),
    );
    extra.insert("pi".into(), json!(gen.pi()));
    sink.emit(
        &io::prob_trajectory_csv(&out.trajectory, out.std_err.as_deref()),
        &a,
        extra,
    )
}

fn run_classical_map(a: ClassicalArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let memory = memory_config(&a)?;
    let gen = load_generator(&a.k_file)?;
    let metric = parse_metric(&a.metric)?;
    let spec = SimplexMapSpec {
        memory,
        metric,
        resolution: fill(&mut a.resolution, 40),
        horizon: fill(&mut a.horizon, 20.0),
        steps: fill(&mut a.steps, 2000),
        include_boundary: fill(&mut a.include_boundary, true),
    };
    let bits = fill(&mut a.bits, false);
    let sink = Sink::new("classical-map", &a.output);
    let grid = scaled(simplex_map(&gen, &spec)?, info_scale(bits))?;
    sink.emit_grid(&grid, &a, Map::new(), metric.name())
}

fn run_alpha_sweep(a: AlphaSweepArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let gen = load_generator(&a.k_file)?;
    let metric = parse_metric(&a.metric)?;
    let alphas = Axis::linspace(
        "alpha",
        fill(&mut a.alpha_min, 0.3),
        fill(&mut a.alpha_max, 1.0),
        fill(&mut a.alpha_points, 8),
    );
    let p0 = a.p0.get_or_insert_with(|| vec!["1,0,0".into()]).clone();
    let spec = AlphaSweepSpec {
        alphas: alphas.values.clone(),
        initial_states: p0
            .iter()
            .map(|s| parse_simplex_point(s))
            .collect::<Result<_>>()?,
        metric,
        horizons: a.horizons.get_or_insert_with(|| vec![10.0, 100.0]).clone(),
        steps_per_unit: fill(&mut a.steps_per_unit, 100),
    };
    let bits = fill(&mut a.bits, false);
    let sink = Sink::new("alpha-sweep", &a.output);
    let sweep = classical_alpha_sweep(&gen, &spec)?;
    let grid = scaled(sweep.grid, info_scale(bits))?;
    let declines: Vec<Value> = (0..grid.axis2.len())
        .map(|j| {
            let col: Vec<f64> = grid
                .column(j)
                .into_iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect();
            json!(steepest_decline(&grid.axis1.values, &col))
        })
        .collect();
    let mut extra = Map::new();
    extra.insert(
        "profiles".into(),
        serde_json::to_value(&sweep.profiles).expect("json"),
    );
    extra.insert("steepest_decline".into(), Value::Array(declines));
    sink.emit_grid(&grid, &a, extra, metric.name())
}

fn run_backflow(a: BackflowArgs) -> Result<()> {
    let mut a = merge_config(&a, a.output.config.as_deref())?;
    let input = required(&a.input, "input")?;
    let epsilon = fill(&mut a.epsilon, 0.0);
    if !(epsilon >= 0.0) {
        return Err(Error::Usage(format!(
            "--epsilon must be >= 0, got {epsilon}"
        )));
    }
    let traj = io::read_trace_csv(&io::read_file(&input)?, &input.display().to_string())?;
    let result = backflow_functional(&traj, epsilon);
    let text = serde_json::to_string_pretty(&result).expect("json") + "\n";
    let sink = Sink::new("backflow", &a.output);
    to_stdout(&text)?;
    if let Some(p) = sink.path("json") {
        let mut meta = Map::new();
        meta.insert("command".into(), json!("backflow"));
        meta.insert(
            "config".into(),
            strip_nulls(serde_json::to_value(&a).expect("json")),
        );
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        meta.insert(
            "result".into(),
            serde_json::to_value(&result).expect("json"),
        );
        io::write_file(
            &p,
            &(serde_json::to_string_pretty(&Value::Object(meta)).expect("json") + "\n"),
        )?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ml(a) => run_ml(a),
        Command::QuantumTraj(a) => run_quantum_traj(a),
        Command::QuantumNqe(a) => run_quantum_nqe(a),
        Command::QuantumPhase(a) => run_quantum_phase(a),
        Command::ClassicalTraj(a) => run_classical_traj(a),
        Command::ClassicalMap(a) => run_classical_map(a),
        Command::AlphaSweep(a) => run_alpha_sweep(a),
        Command::Backflow(a) => run_backflow(a),
    }
}

/// Parses arguments and runs; returns the process exit code. Failures are
/// reported on one stderr line as `error[category]: message`.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    2
                } else {
                    0
                };
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {}", one_line(first));
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), one_line(&e.to_string()));
            if e.category() == "usage" {
                2
            } else {
                1
            }
        }
    }
}
