use std::f64::consts::PI;

use infoflow::backflow::backflow_functional;
use infoflow::quantum::{
    horizon_scaling, logspace, n_qe, n_qe_report, sample_bqe, time_grid, QuantumModel,
    QuantumParams, Sampling,
};
use infoflow::Trajectory;
use proptest::prelude::*;

fn params(alpha: f64, lambda: f64, omega: f64) -> QuantumParams {
    QuantumParams::new(alpha, lambda, omega).unwrap()
}

fn closed_form(lambda: f64, omega: f64, t: f64) -> f64 {
    0.25 * (-2.0 * lambda * t).exp() * (omega * t).sin().powi(2)
}

/// Revival measure of `1/4 e^{-2 l t} sin^2(w t)` on `[0, T]`: every maximum
/// at `(atan(w/l) + k pi)/w` rises from a zero, plus a trailing partial rise.
fn markov_nqe_oracle(lambda: f64, omega: f64, horizon: f64) -> f64 {
    let phase = (omega / lambda).atan();
    let mut total = 0.0;
    let mut k = 0.0;
    loop {
        let t_max = (phase + k * PI) / omega;
        let t_zero = k * PI / omega;
        if t_max > horizon {
            if t_zero < horizon {
                total += closed_form(lambda, omega, horizon);
            }
            return total;
        }
        total += 0.25 * (-2.0 * lambda * t_max).exp() * omega * omega
            / (omega * omega + lambda * lambda);
        k += 1.0;
    }
}

#[test]
fn markov_limit_trajectory() {
    for (lambda, omega) in [(1.0, 2.0), (0.3, 7.0), (2.0, 0.5)] {
        let p = params(1.0, lambda, omega);
        let traj = sample_bqe(&p, 20.0 / lambda, &Sampling::default()).unwrap();
        for (t, v) in traj.iter() {
            assert!((v - closed_form(lambda, omega, t)).abs() <= 1e-9, "t={t}");
        }
    }
}

#[test]
fn markov_limit_revival_measure() {
    for (lambda, omega, horizon) in [
        (1.0, 5.0, 30.0),
        (1.0, 2.0 * PI, 200.0),
        (0.5, 3.0, 17.3),
        (2.0, 0.7, 9.0),
    ] {
        let got = n_qe(&params(1.0, lambda, omega), horizon, &Sampling::default()).unwrap();
        let want = markov_nqe_oracle(lambda, omega, horizon);
        assert!(
            (got - want).abs() <= 1e-10 * want.max(1.0),
            "l={lambda} w={omega}: {got} vs {want}"
        );
    }
}

#[test]
fn backflow_of_sampled_signal_matches_root_oracle() {
    let n = 200_000;
    let times: Vec<f64> = (0..=n).map(|i| 20.0 * i as f64 / n as f64).collect();
    let values: Vec<f64> = times.iter().map(|&t| closed_form(1.0, 3.0, t)).collect();
    let r = backflow_functional(&Trajectory::new(times, values).unwrap(), 0.0);
    let want = markov_nqe_oracle(1.0, 3.0, 20.0);
    assert!((r.n_i - want).abs() <= 1e-6, "{} vs {want}", r.n_i);
}

#[test]
fn zero_frequency_has_no_revivals() {
    for alpha in [0.2, 0.5, 1.0] {
        let r = n_qe_report(&params(alpha, 1.0, 0.0), 100.0, &Sampling::default()).unwrap();
        assert_eq!(r.n_qe, 0.0);
        assert!(r.grid_points >= 1024);
    }
}

#[test]
fn rescaling_invariance() {
    for (alpha, c) in [(0.3, 2.0), (0.5, 0.25), (0.8, 7.0), (1.0, 3.0)] {
        let base = n_qe(&params(alpha, 1.0, 4.0), 50.0, &Sampling::default()).unwrap();
        let scaled = n_qe(&params(alpha, c, 4.0 * c), 50.0 / c, &Sampling::default()).unwrap();
        assert!(
            (base - scaled).abs() <= 1e-8,
            "alpha={alpha} c={c}: {base} vs {scaled}"
        );
    }
}

#[test]
fn grid_resolves_periods_and_respects_cap() {
    let p = params(0.5, 1.0, 5.0);
    let g = time_grid(&p, 100.0, &Sampling::default()).unwrap();
    let period = 2.0 * PI / 5.0;
    assert!(period / (g.time(1) - g.time(0)) >= 64.0 - 1e-9);
    assert_eq!(g.time(g.points() - 1), 100.0);
    let tiny = Sampling {
        points_per_period: 64,
        max_points: 1000,
    };
    assert_eq!(
        time_grid(&p, 1e4, &tiny).unwrap_err().category(),
        "resource"
    );
    assert_eq!(
        time_grid(&p, 10.0, &Sampling::with_points_per_period(4))
            .unwrap_err()
            .category(),
        "domain"
    );
}

#[test]
fn refinement_converges() {
    let p = params(0.4, 1.0, 3.0);
    let coarse = n_qe(&p, 60.0, &Sampling::with_points_per_period(32)).unwrap();
    let fine = n_qe(&p, 60.0, &Sampling::with_points_per_period(256)).unwrap();
    assert!((coarse - fine).abs() <= 1e-9 * fine, "{coarse} vs {fine}");
}

#[test]
fn slow_envelope_sustains_revivals() {
    // for alpha < 1/2 the measure keeps growing with the horizon
    let hs = logspace(50.0, 800.0, 4);
    let grow = horizon_scaling(&params(0.3, 1.0, 5.0), &hs, &Sampling::default()).unwrap();
    assert!(grow.values.windows(2).all(|w| w[1] > w[0]));
    assert!(grow.slope > 0.3);
    let settle = horizon_scaling(&params(0.9, 1.0, 5.0), &hs, &Sampling::default()).unwrap();
    assert!(settle.slope < 0.01);
}

#[test]
fn invalid_parameters() {
    assert!(QuantumParams::new(0.0, 1.0, 1.0).is_err());
    assert!(QuantumParams::new(0.5, 0.0, 1.0).is_err());
    assert!(QuantumParams::new(0.5, 1.0, -1.0).is_err());
    let m = QuantumModel::new(params(0.5, 1.0, 1.0)).unwrap();
    assert!(m.b_qe(-1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observable_bounds(alpha in 0.05f64..=1.0, omega in 0.0f64..20.0, t in 0.0f64..100.0) {
        let m = QuantumModel::new(params(alpha, 1.0, omega)).unwrap();
        let b = m.b_qe(t).unwrap();
        prop_assert!((0.0..=0.25).contains(&b));
        prop_assert!(b <= 0.25 * m.envelope(t).unwrap().powi(2) + 1e-18);
    }

    #[test]
    fn revival_measure_nonnegative(alpha in 0.1f64..=1.0, omega in 0.1f64..10.0, horizon in 1.0f64..40.0) {
        let v = n_qe(&params(alpha, 1.0, omega), horizon, &Sampling::default()).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v.is_finite());
    }
}
