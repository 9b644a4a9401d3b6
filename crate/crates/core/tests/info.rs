use infoflow::classical::{
    gme_exponential_propagate, uniform_grid, Generator3, ProbTrajectory, SimplexPoint, TransferPlan,
};
use infoflow::info::{
    entropy_overshoot, entropy_standard_error, kl_to_stationary, shannon_entropy,
};
use proptest::prelude::*;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pt(a: f64, b: f64, c: f64) -> SimplexPoint {
    SimplexPoint::new([a, b, c]).unwrap()
}

fn simplex_point() -> impl Strategy<Value = SimplexPoint> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(u, v)| {
        let (a, b) = if u + v > 1.0 {
            (1.0 - u, 1.0 - v)
        } else {
            (u, v)
        };
        SimplexPoint::new([a, b, (1.0 - a - b).max(0.0)]).unwrap()
    })
}

#[test]
fn entropy_reference_values() {
    assert_eq!(shannon_entropy(&SimplexPoint::vertex(2)), 0.0);
    let h = shannon_entropy(&pt(0.5, 0.25, 0.25));
    assert!((h - 1.5 * std::f64::consts::LN_2).abs() < 1e-15);
    assert!((shannon_entropy(&SimplexPoint::uniform()) - 3f64.ln()).abs() < 1e-15);
}

#[test]
fn relative_entropy_reference_values() {
    let pi = *Generator3::reference().pi();
    let p = pt(0.2, 0.3, 0.5);
    let want = 0.2 * (0.2f64 / 0.5).ln() + 0.3 * (0.3f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.25).ln();
    assert!((kl_to_stationary(&p, &pi).unwrap() - want).abs() < 1e-15);
    assert_eq!(kl_to_stationary(&pi, &pi).unwrap(), 0.0);
    let d = kl_to_stationary(&SimplexPoint::vertex(1), &pi).unwrap();
    assert!((d - 4f64.ln()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn entropy_is_bounded(p in simplex_point()) {
        let h = shannon_entropy(&p);
        prop_assert!(h >= 0.0 && h <= 3f64.ln() + 1e-15);
    }

    #[test]
    fn entropy_is_concave(p in simplex_point(), q in simplex_point(), w in 0.0f64..=1.0) {
        let (a, b) = (p.as_array(), q.as_array());
        let mix = SimplexPoint::new(std::array::from_fn(|i| w * a[i] + (1.0 - w) * b[i])).unwrap();
        let lhs = shannon_entropy(&mix);
        prop_assert!(lhs >= w * shannon_entropy(&p) + (1.0 - w) * shannon_entropy(&q) - 1e-12);
    }

    #[test]
    fn relative_entropy_is_nonnegative_and_zero_only_at_pi(p in simplex_point()) {
        let pi = *Generator3::reference().pi();
        let d = kl_to_stationary(&p, &pi).unwrap();
        prop_assert!(d >= 0.0);
        if p.max_abs_diff(&pi) > 1e-3 {
            prop_assert!(d > 0.0);
        }
    }
}

#[test]
fn relative_entropy_needs_full_support() {
    let e = kl_to_stationary(&SimplexPoint::uniform(), &pt(0.5, 0.5, 0.0)).unwrap_err();
    assert_eq!(e.category(), "domain");
}

#[test]
fn entropy_standard_error_matches_sampling_spread() {
    let p = pt(0.6, 0.3, 0.1);
    let n = 2000;
    let model = WeightedIndex::new(p.as_array()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reps = 4000;
    let hs: Vec<f64> = (0..reps)
        .map(|_| {
            let mut c = [0usize; 3];
            for _ in 0..n {
                c[model.sample(&mut rng)] += 1;
            }
            let q = SimplexPoint::new(std::array::from_fn(|i| c[i] as f64 / n as f64)).unwrap();
            shannon_entropy(&q)
        })
        .collect();
    let mean = hs.iter().sum::<f64>() / reps as f64;
    let sd = (hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let se = entropy_standard_error(&p, n);
    assert!((sd / se - 1.0).abs() < 0.05, "{sd} vs {se}");
}

#[test]
fn markov_relaxation_toward_uniform_has_no_overshoot() {
    let g = Generator3::symmetric_uniform(1.0).unwrap();
    let grid = uniform_grid(10.0, 500).unwrap();
    let plan = TransferPlan::markov(&g, &grid).unwrap();
    for p0 in [
        SimplexPoint::vertex(0),
        pt(0.7, 0.2, 0.1),
        pt(0.0, 0.5, 0.5),
    ] {
        let r = entropy_overshoot(&plan.apply(&p0).unwrap());
        assert_eq!(r.delta_h, 0.0);
    }
}

#[test]
fn markov_relaxation_toward_nonuniform_pi_can_overshoot() {
    // the entropy of pi = (1/2, 1/4, 1/4) is below ln 3, so paths through the
    // uniform point rise above H(pi) and fall back
    let g = Generator3::reference();
    let grid = uniform_grid(10.0, 1000).unwrap();
    let traj = TransferPlan::markov(&g, &grid)
        .unwrap()
        .apply(&SimplexPoint::vertex(2))
        .unwrap();
    let r = entropy_overshoot(&traj);
    assert!(r.h_max > shannon_entropy(g.pi()));
    assert!(r.delta_h > 1e-3);
    assert!(r.t_max > 0.0 && r.t_max < 10.0);
}

#[test]
fn overshoot_bookkeeping() {
    let times = vec![0.0, 1.0, 2.0, 3.0];
    let states = vec![
        SimplexPoint::vertex(0),
        SimplexPoint::uniform(),
        pt(0.5, 0.5, 0.0),
        pt(0.6, 0.2, 0.2),
    ];
    let r = entropy_overshoot(&ProbTrajectory::new(times, states).unwrap());
    assert_eq!(r.t_max, 1.0);
    assert!((r.h_max - 3f64.ln()).abs() < 1e-15);
    assert!((r.h_min_after - std::f64::consts::LN_2).abs() < 1e-15);
    assert!((r.delta_h - (3f64.ln() - std::f64::consts::LN_2)).abs() < 1e-15);
}

#[test]
fn gme_overshoot_is_positive_somewhere() {
    let g = Generator3::reference();
    let grid = uniform_grid(10.0, 2000).unwrap();
    let traj = gme_exponential_propagate(&g, 2.0, &pt(0.1, 0.1, 0.8), &grid).unwrap();
    assert!(entropy_overshoot(&traj).delta_h > 1e-3);
}
