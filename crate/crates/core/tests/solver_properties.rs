use proptest::prelude::*;
use soilradar::harness::{generate_observations, stream_rng, NoiseModel, ReflectorSet, TrajectorySpec};
use soilradar::inverse::{solve, Bounds, SolverConfig};
use soilradar::layers::LayerStack;

fn field() -> impl Strategy<Value = LayerStack> {
    (0.2f64..2.0, 1.1f64..5.0, 2.0f64..20.0)
        .prop_map(|(h1, eps1, eps2)| LayerStack::from_altitude(10.0, h1, 0.15, eps1, eps2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn never_worse_than_any_start(stack in field(), seed in 0u64..1000) {
        let obs = generate_observations(
            &stack,
            &TrajectorySpec::dynamic(),
            &NoiseModel::default(),
            ReflectorSet::Two,
            &mut stream_rng(seed, 1),
        ).unwrap();
        let est = solve(&obs, 0.15, &SolverConfig::default()).unwrap();
        prop_assert_eq!(est.starts.len(), est.starts_tried);
        for s in &est.starts {
            prop_assert!(est.residual_norm <= s.initial_residual_norm + 1e-12);
        }
        prop_assert!(est.converged);
        prop_assert!(Bounds::for_observations(&obs).contains(&est.params));
    }

    #[test]
    fn noise_free_dynamic_recovery(stack in field()) {
        let obs = generate_observations(
            &stack,
            &TrajectorySpec::dynamic(),
            &NoiseModel::noiseless(),
            ReflectorSet::Two,
            &mut stream_rng(0, 1),
        ).unwrap();
        let est = solve(&obs, 0.15, &SolverConfig::default()).unwrap();
        prop_assert!((est.params.h1 - stack.h1).abs() < 1e-3);
        prop_assert!((est.params.eps1 - stack.eps1).abs() < 1e-3);
        prop_assert!((est.params.eps2 - stack.eps2).abs() < 1e-3);
    }
}

#[test]
fn static_hover_is_flagged_degenerate() {
    let stack = LayerStack::from_altitude(10.0, 1.0, 0.15, 3.0, 10.0).unwrap();
    let obs = generate_observations(
        &stack,
        &TrajectorySpec::hover(6),
        &NoiseModel::noiseless(),
        ReflectorSet::One,
        &mut stream_rng(0, 1),
    )
    .unwrap();
    assert!(solve(&obs, 0.15, &SolverConfig::default()).unwrap().degenerate);
}
