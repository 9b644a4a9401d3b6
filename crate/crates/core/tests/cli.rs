use std::path::Path;
use std::process::{Command, Output};

use infoflow::io::read_grid_csv;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoflow"))
        .args(args)
        .env_remove("INFOFLOW_OUT_DIR")
        .output()
        .expect("spawn infoflow")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn ml_single_value() {
    let o = run(&["ml", "--alpha", "0.5", "--x", "1.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("alpha,x,value,regime"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = row[2].parse().unwrap();
    assert!((v - 0.427_583_576_155_807).abs() < 1e-14);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["quantum-nqe", "--alpha", "0.5", "--omega-lambda", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[usage]"), "{err}");
    assert!(err.contains("omega-lambda"), "{err}");
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "alpha = 0.5\nomega = 2.0\nomega-lambda = 3.0\n").unwrap();
    let o = run(&["quantum-nqe", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("omega-lambda"), "{}", stderr(&o));
}

#[test]
fn invalid_value_is_a_domain_error() {
    let o = run(&["ml", "--alpha", "1.5", "--x", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[domain]"));
}

#[test]
fn flags_override_config_and_config_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "alpha = 0.7\nlambda = 1.0\nomega = 3.0\nhorizon = 200.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "quantum-nqe",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "50",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: Value = serde_json::from_str(&read(&out.join("quantum-nqe.json"))).unwrap();
    assert_eq!(meta["config"]["horizon"], 50.0);
    assert_eq!(meta["config"]["alpha"], 0.7);
    assert_eq!(meta["command"], "quantum-nqe");
    assert!(meta["version"].is_string());
    assert!(meta["wall_time_s"].is_number());
    let csv = read(&out.join("quantum-nqe.csv"));
    assert!(csv.lines().nth(1).unwrap().starts_with("50.0,"), "{csv}");
}

#[test]
fn small_phase_grid_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = run(&[
        "quantum-phase",
        "--alpha-min",
        "0.5",
        "--alpha-max",
        "1.0",
        "--alpha-points",
        "2",
        "--ratio-min",
        "1",
        "--ratio-max",
        "3",
        "--ratio-points",
        "2",
        "--horizon",
        "20",
        "--svg",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(&out.join("quantum-phase.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "alpha\\omega_over_lambda,1.0,3.0");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
    let meta_text = read(&out.join("quantum-phase.json"));
    let meta: Value = serde_json::from_str(&meta_text).unwrap();
    let grid = read_grid_csv(&csv, serde_json::Map::new(), "quantum-phase.csv").unwrap();
    assert_eq!(grid.axis1.values, vec![0.5, 1.0]);
    assert_eq!(grid.axis2.values, vec![1.0, 3.0]);
    assert!(grid.values.iter().all(|v| v.unwrap() > 0.0));
    assert!(meta["config"].is_object());
    let svg = read(&out.join("quantum-phase.svg"));
    assert_eq!(svg.matches("class=\"cell\"").count(), 4);
    assert!(svg.contains("viewBox"));
}

#[test]
fn grid_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "classical-map",
        "--model",
        "gme",
        "--gamma",
        "2",
        "--metric",
        "delta_h",
        "--resolution",
        "6",
        "--horizon",
        "5",
        "--steps",
        "200",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(&dir.path().join("classical-map.csv"));
    let grid = read_grid_csv(&csv, serde_json::Map::new(), "classical-map.csv").unwrap();
    assert_eq!(grid.shape(), (7, 7));
    assert_eq!(grid.values.iter().flatten().count(), 28);
    assert_eq!(infoflow::io::grid_csv(&grid), csv);
}

#[test]
fn backflow_json() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    std::fs::write(&trace, "t,I\n0,0\n1,1\n2,0.5\n3,2\n").unwrap();
    let o = run(&["backflow", "--input", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_i"], 2.5);
    let iv = v["intervals"].as_array().unwrap();
    assert_eq!(iv.len(), 2);
    assert_eq!(iv[1]["t_start"], 2.0);
    assert_eq!(iv[1]["t_end"], 3.0);
}

#[test]
fn missing_file_is_an_io_error() {
    let o = run(&["backflow", "--input", "/nonexistent/trace.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.starts_with("error[io]") && err.contains("/nonexistent/trace.csv"),
        "{err}"
    );
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let cases: [&[&str]; 4] = [
        &[
            "quantum-traj",
            "--alpha",
            "0.4",
            "--omega",
            "3",
            "--horizon",
            "10",
        ],
        &[
            "quantum-nqe",
            "--alpha",
            "0.4",
            "--omega",
            "3",
            "--horizons",
            "10,40",
        ],
        &[
            "classical-traj",
            "--model",
            "fractional",
            "--alpha",
            "0.6",
            "--p0",
            "1,0,0",
            "--steps",
            "100",
        ],
        &[
            "alpha-sweep",
            "--metric",
            "n_dkl",
            "--alpha-points",
            "3",
            "--horizons",
            "2,4",
            "--steps-per-unit",
            "20",
        ],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success(), "{args:?}: {}", stderr(&a));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn monte_carlo_runs_are_bit_reproducible() {
    let args = [
        "classical-traj",
        "--model",
        "erlang2-mc",
        "--ntraj",
        "5000",
        "--seed",
        "17",
        "--p0",
        "0.2,0.3,0.5",
        "--horizon",
        "3",
        "--steps",
        "30",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("t,p1,p2,p3,se1,se2,se3\n"));
    let mut other = args;
    other[6] = "18";
    assert_ne!(run(&other).stdout, a.stdout);
}

#[test]
fn generator_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("k.txt");
    std::fs::write(&k, "# symmetric\n0 1 1\n1 0 1\n1 1 0\n").unwrap();
    let o = run(&[
        "classical-traj",
        "--model",
        "markov",
        "--k-file",
        k.to_str().unwrap(),
        "--p0",
        "1,0,0",
        "--horizon",
        "50",
        "--steps",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let last: Vec<f64> = out
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(last[1..].iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
}
