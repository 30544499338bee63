use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpdpo::dualopt::StepMode;
use vpdpo::embedding::{embedding_of_policy, FiniteModel, KernelEmbedding, TabularFeatures};
use vpdpo::fenchel::ConvexOracle;
use vpdpo::lowrank::ModelClass;
use vpdpo::planner::{plan_known_model, StagePolicy};
use vpdpo::vpdpo::{regret_violation, run, run_partial, Environment, ExperimentSpec, LowRankSettings, TruthOptions};

fn known_spec(model: FiniteModel, features: TabularFeatures, f: ConvexOracle, rounds: usize) -> ExperimentSpec {
    ExperimentSpec {
        environment: Environment::Known { model, features },
        objective: f,
        constraint: None,
        gamma_cap: 1.0,
        rounds,
        delta: 0.1,
        step: StepMode::Anytime,
        seed: 5,
        comparator: TruthOptions::default(),
    }
}

fn random_known(seed: u64) -> (FiniteModel, TabularFeatures) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = FiniteModel::random(3, 2, 3, 0, &mut rng).unwrap();
    (model, TabularFeatures::one_hot(3, 3, 2))
}

#[test]
fn linear_objective_is_optimal_from_the_first_episode() {
    let (model, feats) = random_known(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
    let spec = known_spec(model, feats, ConvexOracle::linear(c), 20);
    let records = run(&spec).unwrap();
    let truth = spec.ground_truth().unwrap().unwrap();
    let report = regret_violation(&records, Some(&truth), &spec.objective, None);
    for r in &records {
        assert!((spec.objective.value(r.realized.as_slice()) - truth.value).abs() < 1e-12);
        assert_eq!(r.planned, records[0].planned);
    }
    assert!(report.regret.abs() < 1e-10);
    assert!(report.cumulative_gap.abs() < 1e-10);
}

#[test]
fn single_round_logs_the_initial_plan() {
    let (model, feats) = random_known(3);
    let f = ConvexOracle::dist_point(vec![0.2; 18]);
    let spec = known_spec(model.clone(), feats.clone(), f.clone(), 1);
    let records = run(&spec).unwrap();
    assert_eq!(records.len(), 1);
    let initial = plan_known_model(&model, &[0.0; 18], &feats).unwrap();
    assert_eq!(records[0].planned, initial.embedding);
    assert!(records[0].dual.alpha().iter().all(|a| *a == 0.0));
    let truth = spec.ground_truth().unwrap().unwrap();
    let report = regret_violation(&records, Some(&truth), &f, None);
    assert!((report.regret - (f.value(records[0].realized.as_slice()) - truth.value)).abs() < 1e-12);
}

#[test]
fn apprenticeship_distance_halves_with_ten_times_the_rounds() {
    let (model, feats) = random_known(9);
    let expert = StagePolicy::deterministic(3, 3, 2, &[1, 0, 1, 0, 0, 1, 1, 1, 0]).unwrap();
    let target = embedding_of_policy(&expert, &model, &feats).unwrap().into_vec();
    let f = ConvexOracle::dist_point(target);
    let short = run(&known_spec(model.clone(), feats.clone(), f.clone(), 200)).unwrap();
    let long = run(&known_spec(model, feats, f, 2000)).unwrap();
    let (a, b) = (short.last().unwrap().f_hat, long.last().unwrap().f_hat);
    assert!(b <= a / 2.0, "f at T=2000 is {b}, at T=200 is {a}");
}

#[test]
fn running_means_match_the_logged_embeddings() {
    let (model, feats) = random_known(4);
    let g = ConvexOracle::signed_ball(vec![0.3; 18], 0.5).unwrap();
    let mut spec = known_spec(model, feats, ConvexOracle::dist_point(vec![0.0; 18]), 60);
    spec.constraint = Some(g);
    spec.gamma_cap = 2.0;
    let records = run(&spec).unwrap();
    for (i, r) in records.iter().enumerate() {
        let planned: Vec<KernelEmbedding> = records[..=i].iter().map(|r| r.planned.clone()).collect();
        let realized: Vec<KernelEmbedding> = records[..=i].iter().map(|r| r.realized.clone()).collect();
        let (p, q) = (
            KernelEmbedding::mean(&planned).unwrap(),
            KernelEmbedding::mean(&realized).unwrap(),
        );
        for (x, y) in p.as_slice().iter().zip(r.planned_mean.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in q.as_slice().iter().zip(r.mixed.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
        assert!(
            r.dual.is_feasible(&spec.objective, spec.constraint.as_ref()),
            "t={}",
            r.t
        );
    }
}

#[test]
fn runs_are_deterministic_given_the_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let class = ModelClass::random(3, 2, 3, 2, 0, 3, 2, &mut rng).unwrap();
    let feats = TabularFeatures::one_hot(3, 3, 2);
    let spec = ExperimentSpec {
        environment: Environment::LowRank {
            class,
            features: feats,
            settings: LowRankSettings::default(),
        },
        objective: ConvexOracle::dist_point(vec![0.1; 18]),
        constraint: None,
        gamma_cap: 1.0,
        rounds: 15,
        delta: 0.1,
        step: StepMode::Anytime,
        seed: 21,
        comparator: TruthOptions::default(),
    };
    let a = run(&spec).unwrap();
    let b = run(&spec).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.coverage));
}

#[test]
fn invalid_specs_fail_before_the_first_record() {
    let (model, feats) = random_known(0);
    let mut spec = known_spec(model, feats, ConvexOracle::linear(vec![0.0; 18]), 5);
    spec.delta = 1.5;
    let log = run_partial(&spec);
    assert!(log.records.is_empty());
    assert_eq!(log.failure.unwrap().exit_code(), 1);
}

#[test]
fn planner_budget_errors_keep_the_partial_log() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let class = ModelClass::random(3, 2, 3, 2, 0, 3, 2, &mut rng).unwrap();
    let spec = ExperimentSpec {
        environment: Environment::LowRank {
            class,
            features: TabularFeatures::one_hot(3, 3, 2),
            settings: LowRankSettings {
                budget: 1,
                ..LowRankSettings::default()
            },
        },
        objective: ConvexOracle::dist_point(vec![0.1; 18]),
        constraint: None,
        gamma_cap: 1.0,
        rounds: 10,
        delta: 0.1,
        step: StepMode::Anytime,
        seed: 1,
        comparator: TruthOptions::default(),
    };
    let log = run_partial(&spec);
    assert!(log.records.is_empty());
    assert_eq!(log.failure.unwrap().exit_code(), 2);
}
