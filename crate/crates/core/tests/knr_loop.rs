use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vpdpo::dualopt::StepMode;
use vpdpo::embedding::StageMapped;
use vpdpo::fenchel::ConvexOracle;
use vpdpo::knr::{DynamicsFeatures, FeatureSpec, KnrDynamics, StationaryFeatures};
use vpdpo::planner::KnrPlanOptions;
use vpdpo::vpdpo::{regret_violation, run, Environment, ExperimentSpec, KnrSettings, TruthOptions};

fn spec(seed: u64, rounds: usize) -> ExperimentSpec {
    let phi = DynamicsFeatures::new(&FeatureSpec::RandomProjection { dim: 3, seed: 7 }, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dynamics = KnrDynamics::random_truth(phi.clone(), 0.1, 4, vec![0.0, 0.0], 0.8, &mut rng).unwrap();
    let features = StageMapped::identity(StationaryFeatures {
        features: phi,
        horizon: 4,
    });
    ExperimentSpec {
        environment: Environment::Knr {
            dynamics,
            features,
            settings: KnrSettings {
                lambda: 1.0,
                plan: KnrPlanOptions {
                    nodes: Some(15),
                    mc_samples: 200,
                    ..KnrPlanOptions::default()
                },
                truth_samples: 2000,
            },
        },
        objective: ConvexOracle::dist_point(vec![0.2; 12]),
        constraint: Some(ConvexOracle::signed_ball(vec![0.0; 12], 0.8).unwrap()),
        gamma_cap: 1.0,
        rounds,
        delta: 0.1,
        step: StepMode::Anytime,
        seed,
        comparator: TruthOptions::default(),
    }
}

#[test]
fn knr_run_is_reproducible_and_covered() {
    let s = spec(3, 8);
    let a = run(&s).unwrap();
    assert_eq!(a, run(&s).unwrap());
    assert_eq!(a.len(), 8);
    assert!(a.iter().all(|r| r.coverage));
    assert!(a.iter().all(|r| r.realized_stderr > 0.0));
    assert!(s.ground_truth().unwrap().is_none());
    let report = regret_violation(&a, None, &s.objective, s.constraint.as_ref());
    assert!(report.regret.is_nan());
    assert!(report.violation.is_finite());
}

#[test]
fn knr_seeds_give_different_trajectories() {
    let a = run(&spec(1, 3)).unwrap();
    let b = run(&spec(2, 3)).unwrap();
    assert_ne!(a[2].trajectory, b[2].trajectory);
}
