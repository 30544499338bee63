//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 2 5`.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use vpdpo::dualopt::{
    online_projected_subgradient, project_ball, project_cone_slab, BallDomain, Comparator, LinearReward, StepMode,
};
use vpdpo::embedding::{embedding_of_policy, FiniteModel, StageMapped, TabularFeatures};
use vpdpo::fenchel::{ConvexOracle, DualDomain};
use vpdpo::harness::find_preset;
use vpdpo::knr::{gaussian_chi_square, DynamicsFeatures, FeatureSpec, KnrDynamics, KnrEstimate, StationaryFeatures};
use vpdpo::linalg::{dist, dot, log_log_slope, norm};
use vpdpo::lowrank::ModelClass;
use vpdpo::planner::{value_difference_check, KnrPlanOptions, LinearCost, StagePolicy};
use vpdpo::vpdpo::{
    bound_gamma, ground_truth_solve, regret_violation, run, Environment, ExperimentSpec, KnrSettings, LowRankSettings,
    TruthMode, TruthOptions,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

type Check = fn() -> Outcome;

const CRITERIA: [(usize, &str, Check, u64); 11] = [
    (1, "Fenchel reconstruction", fenchel_reconstruction, 10),
    (2, "cone-slab projection", projection_correctness, 30),
    (3, "value-difference identity", value_difference, 10),
    (4, "elliptical potential", elliptical_potential, 10),
    (5, "KNR ellipsoid coverage", knr_coverage, 300),
    (6, "low-rank coverage and decay", lowrank_coverage, 300),
    (7, "optimism accounting", optimism_accounting, 120),
    (8, "end-to-end sublinearity", sublinearity, 900),
    (9, "online subgradient regret", online_regret, 60),
    (10, "Gaussian chi-square", chi_square, 5),
    (11, "comparator self-consistency", comparator_consistency, 120),
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check, budget) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.2}s of {budget}s{}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Accept-if-better random search for `max_α α·x − f*(α)` over the dual
/// domain, with a geometrically shrinking proposal scale.
fn dual_search(oracle: &ConvexOracle, x: &[f64], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let objective = |a: &[f64]| dot(a, x) - oracle.conjugate(a).unwrap();
    match oracle.dual_domain() {
        DualDomain::Singleton(c) => {
            let v = objective(&c);
            (v, v)
        }
        DualDomain::Ball { radius } => {
            let mut best = project_ball(&gaussian_vec(rng, x.len()), radius);
            let mut best_v = objective(&best);
            let mut highest = best_v;
            let mut scale = radius;
            for _ in 0..4000 {
                let step = gaussian_vec(rng, x.len());
                let cand: Vec<f64> = best.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
                let cand = project_ball(&cand, radius);
                let v = objective(&cand);
                highest = highest.max(v);
                if v > best_v {
                    best = cand;
                    best_v = v;
                }
                scale *= 0.997;
            }
            (best_v, highest)
        }
    }
}

fn fenchel_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = 6;
    let oracles = vec![
        ConvexOracle::linear(uniform_vec(&mut rng, d, -1.0, 1.0)),
        ConvexOracle::affine(uniform_vec(&mut rng, d, -1.0, 1.0), 0.3),
        ConvexOracle::dist_point(uniform_vec(&mut rng, d, -1.0, 1.0)),
        ConvexOracle::signed_ball(uniform_vec(&mut rng, d, -1.0, 1.0), 0.5).unwrap(),
        ConvexOracle::dist_ball(uniform_vec(&mut rng, d, -1.0, 1.0), 0.7).unwrap(),
    ];
    let mut closed_err: f64 = 0.0;
    let mut search_err: f64 = 0.0;
    let mut excess: f64 = f64::NEG_INFINITY;
    for oracle in &oracles {
        for _ in 0..1000 {
            let x = uniform_vec(&mut rng, d, -2.0, 2.0);
            let f = oracle.value(&x);
            let a = oracle.dual_maximizer(&x);
            let closed = dot(&a, &x) - oracle.conjugate(&a).unwrap();
            closed_err = closed_err.max((closed - f).abs());
            let (found, highest) = dual_search(oracle, &x, &mut rng);
            search_err = search_err.max((found - f).abs());
            excess = excess.max(highest - f);
        }
    }
    Outcome::new(
        closed_err <= 1e-7 && search_err <= 1e-3 && excess <= 1e-9,
        format!(
            "closed-form error {closed_err:.2e} (≤ 1e-7), random-search error {search_err:.2e} (≤ 1e-3), \
             largest dual value above f {excess:.2e}"
        ),
    )
}

fn projection_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = 4;
    let mut worst_vi = f64::NEG_INFINITY;
    let mut worst_idem: f64 = 0.0;
    let mut worst_infeasible: f64 = 0.0;
    for _ in 0..200 {
        let cap = rng.random_range(0.5..3.0);
        let slope = rng.random_range(0.2..2.0);
        let beta: Vec<f64> = gaussian_vec(&mut rng, d).iter().map(|v| 3.0 * v).collect();
        let gamma = rng.random_range(-3.0..6.0);
        let (pb, pg) = project_cone_slab(&beta, gamma, cap, slope).unwrap();
        worst_infeasible = worst_infeasible.max(norm(&pb) - slope * pg).max(-pg).max(pg - cap);
        let (qb, qg) = project_cone_slab(&pb, pg, cap, slope).unwrap();
        worst_idem = worst_idem.max(dist(&qb, &pb)).max((qg - pg).abs());
        for k in 0..10_000 {
            let zg = if k % 10 == 0 {
                cap * (k % 20 == 0) as u8 as f64
            } else {
                rng.random_range(0.0..cap)
            };
            let dir = gaussian_vec(&mut rng, d);
            let r = if k % 3 == 0 {
                1.0
            } else {
                rng.random::<f64>().powf(1.0 / d as f64)
            };
            let zb: Vec<f64> = dir.iter().map(|v| v / norm(&dir) * r * slope * zg).collect();
            let vi: f64 = beta
                .iter()
                .zip(&pb)
                .zip(&zb)
                .map(|((v, p), z)| (v - p) * (z - p))
                .sum::<f64>()
                + (gamma - pg) * (zg - pg);
            worst_vi = worst_vi.max(vi);
        }
    }
    Outcome::new(
        worst_vi <= 1e-8 && worst_idem <= 1e-12 && worst_infeasible <= 1e-9,
        format!(
            "max ⟨v − P(v), z − P(v)⟩ {worst_vi:.2e} (≤ 1e-8), idempotence {worst_idem:.2e} (≤ 1e-12), \
             infeasibility {worst_infeasible:.2e}"
        ),
    )
}

/// `E[Σ_h c(s_h, a_h)]` by pushing the state distribution forward.
fn forward_value(model: &FiniteModel, cost: &LinearCost, policy: &StagePolicy) -> f64 {
    let (ns, na) = (model.states(), model.actions());
    let mut dist_s = vec![0.0; ns];
    dist_s[model.initial_state()] = 1.0;
    let mut total = 0.0;
    for h in 0..model.horizon() {
        let mut next = vec![0.0; ns];
        for (s, mass) in dist_s.iter().enumerate() {
            for a in 0..na {
                let w = mass * policy.probs(h, s)[a];
                total += w * cost.get(h, s, a);
                for (n, p) in next.iter_mut().zip(model.row(h, s, a)) {
                    *n += w * p;
                }
            }
        }
        dist_s = next;
    }
    total
}

fn value_difference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_identity: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for _ in 0..100 {
        let ns = rng.random_range(1..=4);
        let na = rng.random_range(1..=3);
        let nh = rng.random_range(1..=4);
        let init = rng.random_range(0..ns);
        let m1 = FiniteModel::random(ns, na, nh, init, &mut rng).unwrap();
        let m2 = FiniteModel::random(ns, na, nh, init, &mut rng).unwrap();
        let cost = LinearCost::from_table(nh, ns, na, uniform_vec(&mut rng, nh * ns * na, -1.0, 1.0)).unwrap();
        let probs: Vec<f64> = (0..nh * ns)
            .flat_map(|_| {
                let row = uniform_vec(&mut rng, na, 0.01, 1.0);
                let sum: f64 = row.iter().sum();
                row.into_iter().map(move |p| p / sum)
            })
            .collect();
        let policy = StagePolicy::from_probs(nh, ns, na, probs).unwrap();
        let (lhs, rhs) = value_difference_check(&m1, &m2, &cost, &policy).unwrap();
        worst_identity = worst_identity.max((lhs - rhs).abs());
        let direct = forward_value(&m1, &cost, &policy) - forward_value(&m2, &cost, &policy);
        worst_oracle = worst_oracle.max((lhs - direct).abs());
    }
    Outcome::new(
        worst_identity <= 1e-9 && worst_oracle <= 1e-9,
        format!("max |lhs − rhs| {worst_identity:.2e} (≤ 1e-9), lhs vs forward recursion {worst_oracle:.2e}"),
    )
}

fn elliptical_potential() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (d, nh, rounds) = (3, 4, 100);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    for _ in 0..100 {
        let mut est = KnrEstimate::new(2, d, 1.0).unwrap();
        let mut gram = DMatrix::<f64>::identity(d, d);
        let mut lhs = 0.0;
        for _ in 0..rounds {
            let batch: Vec<Vec<f64>> = (0..nh)
                .map(|_| {
                    let v = gaussian_vec(&mut rng, d);
                    let r = rng.random::<f64>().powf(1.0 / d as f64);
                    v.iter().map(|x| x / norm(&v) * r).collect()
                })
                .collect();
            for phi in &batch {
                lhs += est.inverse_norm(phi).powi(2);
            }
            for phi in &batch {
                est.push(phi, &[0.0, 0.0]);
                let p = nalgebra::DVector::from_column_slice(phi);
                gram += &p * p.transpose();
            }
            est.refit().unwrap();
        }
        let log_det = est.log_det_ratio();
        worst_det = worst_det.max((log_det - gram.determinant().ln()).abs());
        worst_ratio = worst_ratio.max(lhs / (2.0 * nh as f64 * log_det));
    }
    Outcome::new(
        worst_ratio <= 1.0 && worst_det <= 1e-9,
        format!("max Σ‖φ‖²/(2H·log det ratio) {worst_ratio:.3} (≤ 1), log det vs direct determinant {worst_det:.2e}"),
    )
}

fn knr_spec(dynamics: &KnrDynamics, phi: &DynamicsFeatures, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        environment: Environment::Knr {
            dynamics: dynamics.clone(),
            features: StageMapped::identity(StationaryFeatures {
                features: phi.clone(),
                horizon: 4,
            }),
            settings: KnrSettings {
                lambda: 1.0,
                plan: KnrPlanOptions {
                    nodes: Some(11),
                    mc_samples: 50,
                    ..KnrPlanOptions::default()
                },
                truth_samples: 50,
            },
        },
        objective: ConvexOracle::dist_point(vec![0.2; 12]),
        constraint: None,
        gamma_cap: 1.0,
        rounds: 100,
        delta: 0.1,
        step: StepMode::Anytime,
        seed,
        comparator: TruthOptions::default(),
    }
}

fn knr_coverage() -> Outcome {
    let phi = DynamicsFeatures::new(&FeatureSpec::RandomProjection { dim: 3, seed: 7 }, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dynamics = KnrDynamics::random_truth(phi.clone(), 0.1, 4, vec![0.0, 0.0], 0.8, &mut rng).unwrap();
    let covered: Vec<bool> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let records = run(&knr_spec(&dynamics, &phi, seed)).unwrap();
            records.iter().all(|r| r.coverage)
        })
        .collect();
    let rate = covered.iter().filter(|c| **c).count() as f64 / covered.len() as f64;
    Outcome::new(
        rate >= 0.9,
        format!(
            "W* inside the ellipsoid for all t in {:.1}% of 200 runs (≥ 90%)",
            100.0 * rate
        ),
    )
}

fn lowrank_class() -> ModelClass {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    ModelClass::random(3, 2, 3, 2, 0, 3, 2, &mut rng).unwrap()
}

fn lowrank_spec(class: &ModelClass, rounds: usize, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        environment: Environment::LowRank {
            class: class.clone(),
            features: TabularFeatures::one_hot(3, 3, 2),
            settings: LowRankSettings::default(),
        },
        objective: ConvexOracle::dist_point(vec![0.15; 18]),
        constraint: None,
        gamma_cap: 1.0,
        rounds,
        delta: 0.1,
        step: StepMode::Anytime,
        seed,
        comparator: TruthOptions::default(),
    }
}

fn lowrank_coverage() -> Outcome {
    let class = lowrank_class();
    assert_eq!(class.len(), 6);
    let runs: Vec<(bool, Option<f64>, Option<f64>)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let records = run(&lowrank_spec(&class, 100, seed)).unwrap();
            (
                records.iter().all(|r| r.coverage),
                records[24].estimation_error,
                records[99].estimation_error,
            )
        })
        .collect();
    let rate = runs.iter().filter(|r| r.0).count() as f64 / runs.len() as f64;
    let early = median(runs[..50].iter().map(|r| r.1.unwrap()).collect());
    let late = median(runs[..50].iter().map(|r| r.2.unwrap()).collect());
    Outcome::new(
        rate >= 0.9 && late <= 0.5 * early,
        format!(
            "truth in every confidence set in {:.1}% of 200 runs (≥ 90%); median ‖P̂ − P*‖₁² {late:.3e} at t=100 \
             vs {early:.3e} at t=25 (≤ 0.5×)",
            100.0 * rate
        ),
    )
}

/// A constrained instance: distance to a random target, with a ball around
/// the uniform policy's embedding as the feasible region.
fn constrained_oracles(
    model: &FiniteModel,
    features: &TabularFeatures,
    rng: &mut ChaCha8Rng,
) -> (ConvexOracle, ConvexOracle, f64) {
    let (ns, na, nh) = (model.states(), model.actions(), model.horizon());
    let u = embedding_of_policy(&StagePolicy::uniform(nh, ns, na), model, features).unwrap();
    let n = u.len();
    let target = uniform_vec(rng, n, 0.0, 0.6);
    let radius = rng.random_range(0.2..0.6) * dist(u.as_slice(), &target);
    let f = ConvexOracle::dist_point(target);
    let g = ConvexOracle::signed_ball(u.as_slice().to_vec(), radius).unwrap();
    let gamma = bound_gamma(f.value(u.as_slice()), 0.0, g.value(u.as_slice())).unwrap();
    (f, g, gamma)
}

fn optimism_accounting() -> Outcome {
    let known: Vec<(bool, f64)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
            let model = FiniteModel::random(3, 2, 3, 0, &mut rng).unwrap();
            let features = TabularFeatures::one_hot(3, 3, 2);
            let (f, g, gamma) = constrained_oracles(&model, &features, &mut rng);
            let spec = ExperimentSpec {
                environment: Environment::Known { model, features },
                objective: f,
                constraint: Some(g),
                gamma_cap: gamma,
                rounds: 100,
                delta: 0.1,
                step: StepMode::Anytime,
                seed,
                comparator: TruthOptions::default(),
            };
            let truth = spec.ground_truth().unwrap();
            let records = run(&spec).unwrap();
            let r = regret_violation(&records, truth.as_ref(), &spec.objective, spec.constraint.as_ref());
            (r.covered, r.optimism_sum)
        })
        .collect();
    let class = lowrank_class();
    let lowrank: Vec<(bool, f64)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(750 + seed);
            let features = TabularFeatures::one_hot(3, 3, 2);
            let (f, g, gamma) = constrained_oracles(class.truth(), &features, &mut rng);
            let spec = ExperimentSpec {
                objective: f,
                constraint: Some(g),
                gamma_cap: gamma,
                ..lowrank_spec(&class, 100, seed)
            };
            let truth = spec.ground_truth().unwrap();
            let records = run(&spec).unwrap();
            let r = regret_violation(&records, truth.as_ref(), &spec.objective, spec.constraint.as_ref());
            (r.covered, r.optimism_sum)
        })
        .collect();
    let summarize = |runs: &[(bool, f64)]| {
        let covered: Vec<f64> = runs.iter().filter(|r| r.0).map(|r| r.1).collect();
        (covered.len(), covered.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    let (kn, kmax) = summarize(&known);
    let (ln, lmax) = summarize(&lowrank);
    Outcome::new(
        kn > 0 && ln > 0 && kmax <= 1e-6 && lmax <= 1e-6,
        format!(
            "max Σθᵗ·(Ψᵗ − Ψ*) {kmax:.2e} over {kn} known-model runs, {lmax:.2e} over {ln} covered low-rank runs \
             (≤ 1e-6)"
        ),
    )
}

fn sublinearity() -> Outcome {
    let horizons = [250usize, 500, 1000, 2000, 4000];
    let preset = find_preset("apprenticeship_tabular_constrained").unwrap();
    let slopes: Vec<(f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let base = (preset.build)(seed).unwrap();
            let truth = base.ground_truth().unwrap();
            let points: Vec<(f64, f64)> = horizons
                .par_iter()
                .map(|&t| {
                    let spec = ExperimentSpec {
                        rounds: t,
                        ..base.clone()
                    };
                    let records = run(&spec).unwrap();
                    let r = regret_violation(&records, truth.as_ref(), &spec.objective, spec.constraint.as_ref());
                    (r.regret.max(1e-6), r.violation.max(1e-6))
                })
                .collect();
            let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
            let regret: Vec<f64> = points.iter().map(|p| p.0).collect();
            let violation: Vec<f64> = points.iter().map(|p| p.1).collect();
            (log_log_slope(&xs, &regret), log_log_slope(&xs, &violation))
        })
        .collect();
    let regret_slope = median(slopes.iter().map(|s| s.0).collect());
    let violation_slope = median(slopes.iter().map(|s| s.1).collect());
    Outcome::new(
        regret_slope <= 0.65 && violation_slope <= 0.65,
        format!("median log-log slope of Regret(T) {regret_slope:.3}, of Violation(T) {violation_slope:.3} (≤ 0.65)"),
    )
}

fn online_regret() -> Outcome {
    let rounds = 10_000;
    let dim = 5;
    let mut worst_ratio = f64::NEG_INFINITY;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let drift = uniform_vec(&mut rng, dim, -0.5, 0.5);
        let rewards: Vec<LinearReward> = (0..rounds)
            .map(|_| {
                LinearReward(
                    uniform_vec(&mut rng, dim, -1.0, 1.0)
                        .iter()
                        .zip(&drift)
                        .map(|(n, d)| n + d)
                        .collect(),
                )
            })
            .collect();
        let g = rewards.iter().map(|r| norm(&r.0)).fold(0.0, f64::max);
        let domain = BallDomain {
            center: uniform_vec(&mut rng, dim, -1.0, 1.0),
            radius: rng.random_range(0.5..2.0),
        };
        let result = online_projected_subgradient(&domain, &rewards, g, None, Comparator::Analytic).unwrap();
        let bound = 3.0 * domain.diameter() * g * (rounds as f64).sqrt();
        worst_ratio = worst_ratio.max(result.regret / bound);
    }
    Outcome::new(
        worst_ratio <= 1.0,
        format!("max regret / (3·R·G·√T) {worst_ratio:.3} over 20 seeds at T = 10⁴ (≤ 1)"),
    )
}

/// `∫ N(μ₂, σ²)²/N(μ₁, σ²)` on one axis by composite Simpson.
fn ratio_integral(mu1: f64, mu2: f64, sigma: f64) -> f64 {
    let density = |x: f64, mu: f64| {
        (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    let center = 2.0 * mu2 - mu1;
    let (lo, hi) = (center - 14.0 * sigma, center + 14.0 * sigma);
    let n = 40_000;
    let h = (hi - lo) / n as f64;
    let integrand = |x: f64| density(x, mu2).powi(2) / density(x, mu1);
    let mut sum = integrand(lo) + integrand(hi);
    for i in 1..n {
        sum += integrand(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn chi_square() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let dim = 1 + i % 2;
        let sigma = rng.random_range(0.3..1.5);
        let mu1 = uniform_vec(&mut rng, dim, -1.0, 1.0);
        let shift: Vec<f64> = uniform_vec(&mut rng, dim, -1.0, 1.0);
        // keep ‖μ₁ − μ₂‖/σ ≤ 2 so the value stays moderate
        let scale = rng.random_range(0.0..2.0) * sigma / norm(&shift);
        let mu2: Vec<f64> = mu1.iter().zip(&shift).map(|(m, s)| m + scale * s).collect();
        let lib = gaussian_chi_square(&mu1, &mu2, sigma).unwrap();
        let quad = mu1
            .iter()
            .zip(&mu2)
            .map(|(a, b)| ratio_integral(*a, *b, sigma))
            .product::<f64>()
            - 1.0;
        worst = worst.max((lib - quad).abs() / lib.abs().max(1.0));
    }
    Outcome::new(
        worst <= 1e-6,
        format!("max quadrature disagreement {worst:.2e} over 20 triples (≤ 1e-6)"),
    )
}

fn comparator_consistency() -> Outcome {
    let gaps: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1100 + seed);
            let model = FiniteModel::random(2, 2, 2, 0, &mut rng).unwrap();
            let features = TabularFeatures::one_hot(2, 2, 2);
            let (f, g, _) = constrained_oracles(&model, &features, &mut rng);
            let solve = |mode| {
                let options = TruthOptions {
                    mode,
                    ..TruthOptions::default()
                };
                ground_truth_solve(&model, &features, &f, Some(&g), &options)
                    .unwrap()
                    .value
            };
            (solve(TruthMode::Enumerate) - solve(TruthMode::FrankWolfe)).abs()
        })
        .collect();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Outcome::new(
        worst <= 1e-5,
        format!("max |enumeration − Frank-Wolfe| {worst:.2e} over 20 instances (≤ 1e-5)"),
    )
}
