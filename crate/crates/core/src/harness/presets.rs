//! Built-in experiments, each generated from a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dualopt::StepMode;
use crate::embedding::{
    embedding_of_policy, monte_carlo_embedding, FiniteModel, RolloutPolicy, StageMapped, TabularFeatures,
};
use crate::error::{Error, Result};
use crate::fenchel::ConvexOracle;
use crate::knr::{DynamicsFeatures, FeatureSpec, KnrDynamics, StationaryFeatures};
use crate::linalg::dist;
use crate::lowrank::ModelClass;
use crate::planner::{plan_known_model, StagePolicy};
use crate::rng::derive_seed;
use crate::vpdpo::{bound_gamma, Environment, ExperimentSpec, KnrSettings, LowRankSettings, TruthOptions};

/// A named generator of experiments.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub build: fn(u64) -> Result<ExperimentSpec>,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "apprenticeship_tabular",
        description: "match the embedding of a greedy expert on a random 4-state tabular MDP",
        build: preset_apprenticeship,
    },
    Preset {
        name: "apprenticeship_tabular_constrained",
        description: "apprenticeship_tabular with a ball constraint around the uniform policy's embedding",
        build: preset_apprenticeship_constrained,
    },
    Preset {
        name: "multiobjective_tabular",
        description: "two projected objectives on a known tabular MDP, distance objective with a ball constraint",
        build: |seed| preset_multiobjective(seed, &MultiObjective::default()),
    },
    Preset {
        name: "multiobjective_lowrank",
        description: "two projected objectives on a low-rank MDP learned from a class of six models",
        build: |seed| {
            preset_multiobjective(
                seed,
                &MultiObjective {
                    env: MultiObjectiveEnv::LowRank,
                    ..MultiObjective::default()
                },
            )
        },
    },
    Preset {
        name: "multiobjective_knr",
        description: "two projected objectives on 2-D regulator dynamics with unknown transition matrix",
        build: |seed| {
            preset_multiobjective(
                seed,
                &MultiObjective {
                    env: MultiObjectiveEnv::Knr,
                    ..MultiObjective::default()
                },
            )
        },
    },
];

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!("unknown preset `{name}`; available: {}", known.join(", ")))
    })
}

const APPRENTICE_SHAPE: (usize, usize, usize) = (4, 2, 4);
/// Constraint radius as a fraction of the expert's distance from the
/// uniform policy.
const BALL_FRACTION: f64 = 0.6;

fn base_spec(environment: Environment, objective: ConvexOracle, rounds: usize, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        environment,
        objective,
        constraint: None,
        gamma_cap: 1.0,
        rounds,
        delta: 0.1,
        step: StepMode::Anytime,
        seed,
        comparator: TruthOptions::default(),
    }
}

struct Apprenticeship {
    model: FiniteModel,
    features: TabularFeatures,
    expert: Vec<f64>,
    uniform: Vec<f64>,
}

fn apprenticeship_instance(seed: u64) -> Result<Apprenticeship> {
    let (ns, na, nh) = APPRENTICE_SHAPE;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xA11));
    let model = FiniteModel::random(ns, na, nh, 0, &mut rng)?;
    let features = TabularFeatures::one_hot(nh, ns, na);
    let d = ns * na;
    let cost: Vec<f64> = (0..nh * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let expert = plan_known_model(&model, &cost, &features)?.embedding.into_vec();
    let uniform = embedding_of_policy(&StagePolicy::uniform(nh, ns, na), &model, &features)?.into_vec();
    Ok(Apprenticeship {
        model,
        features,
        expert,
        uniform,
    })
}

/// `f = ‖Ψ − Ψ_expert‖` with the expert greedy for a random linear cost;
/// the optimum is 0.
pub fn preset_apprenticeship(seed: u64) -> Result<ExperimentSpec> {
    let inst = apprenticeship_instance(seed)?;
    Ok(base_spec(
        Environment::Known {
            model: inst.model,
            features: inst.features,
        },
        ConvexOracle::dist_point(inst.expert),
        1000,
        seed,
    ))
}

/// [`preset_apprenticeship`] with `‖Ψ − Ψ_uniform‖ ≤ 0.6‖Ψ_expert − Ψ_uniform‖`.
/// The uniform policy is the Slater point and `Γ` comes from the lower
/// bound `f* ≥ 0`.
pub fn preset_apprenticeship_constrained(seed: u64) -> Result<ExperimentSpec> {
    let inst = apprenticeship_instance(seed)?;
    let gap = dist(&inst.expert, &inst.uniform);
    if gap < 1e-6 {
        return Err(Error::Config(format!(
            "seed {seed}: the expert coincides with the uniform policy; no informative ball constraint"
        )));
    }
    let g = ConvexOracle::signed_ball(inst.uniform.clone(), BALL_FRACTION * gap)?;
    let f = ConvexOracle::dist_point(inst.expert);
    let gamma_cap = bound_gamma(f.value(&inst.uniform), 0.0, g.value(&inst.uniform))?;
    let mut spec = base_spec(
        Environment::Known {
            model: inst.model,
            features: inst.features,
        },
        f,
        1000,
        seed,
    );
    spec.constraint = Some(g);
    spec.gamma_cap = gamma_cap;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiObjectiveEnv {
    #[default]
    Tabular,
    LowRank,
    Knr,
}

/// Knobs of the multi-objective generator.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiObjective {
    pub env: MultiObjectiveEnv,
    /// Number `I` of projected objectives.
    pub objectives: usize,
    /// Linear outer functions: `f = Σ (ΞΨ)` subject to `Σ (ΞΨ) ≥ b`, a
    /// constrained MDP with linear cost.
    pub linear: bool,
}

impl Default for MultiObjective {
    fn default() -> Self {
        Self {
            env: MultiObjectiveEnv::Tabular,
            objectives: 2,
            linear: false,
        }
    }
}

/// Per-stage `I × d` maps with entries uniform in `[-1, 1]`, so each row
/// `θ_h^i` has `‖θ_h^i‖ ≤ √d`.
pub fn projection_rows<R: Rng + ?Sized>(horizon: usize, objectives: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..horizon)
        .map(|_| (0..objectives * dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

struct UniformActions(usize);

impl RolloutPolicy<[f64]> for UniformActions {
    fn num_actions(&self) -> usize {
        self.0
    }

    fn act(&self, _h: usize, _s: &[f64], u: f64) -> usize {
        ((u * self.0 as f64) as usize).min(self.0 - 1)
    }
}

/// `min ‖ΞΨ − v‖ s.t. ‖ΞΨ − c‖ ≤ r` with the map `Ξ` folded into the
/// features, `c` the uniform policy's mapped embedding (the Slater point)
/// and `v` that of a random deterministic policy, pulled outside the ball.
pub fn preset_multiobjective(seed: u64, options: &MultiObjective) -> Result<ExperimentSpec> {
    if options.objectives == 0 {
        return Err(Error::Config("at least one objective is needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x3B1));
    let k = options.objectives;
    let (environment, uniform, vertex) = match options.env {
        MultiObjectiveEnv::Tabular | MultiObjectiveEnv::LowRank => {
            let (ns, na, nh) = match options.env {
                MultiObjectiveEnv::Tabular => (4, 3, 4),
                _ => (3, 2, 3),
            };
            let (truth, class) = match options.env {
                MultiObjectiveEnv::Tabular => (FiniteModel::random(ns, na, nh, 0, &mut rng)?, None),
                _ => {
                    let class = ModelClass::random(ns, na, nh, 2, 0, 3, 2, &mut rng)?;
                    (class.truth().clone(), Some(class))
                }
            };
            let base = TabularFeatures::random(nh, ns, na, 4, 1.0, &mut rng)?;
            let features = base.mapped(&projection_rows(nh, k, 4, &mut rng), k)?;
            let uniform = embedding_of_policy(&StagePolicy::uniform(nh, ns, na), &truth, &features)?.into_vec();
            let choice: Vec<usize> = (0..nh * ns).map(|_| rng.random_range(0..na)).collect();
            let pick = StagePolicy::deterministic(nh, ns, na, &choice)?;
            let vertex = embedding_of_policy(&pick, &truth, &features)?.into_vec();
            let env = match class {
                None => Environment::Known { model: truth, features },
                Some(class) => Environment::LowRank {
                    class,
                    features,
                    settings: LowRankSettings::default(),
                },
            };
            (env, uniform, vertex)
        }
        MultiObjectiveEnv::Knr => {
            let (nh, na) = (4, 2);
            let phi = DynamicsFeatures::new(
                &FeatureSpec::RandomProjection {
                    dim: 3,
                    seed: derive_seed(seed, 0x9F),
                },
                2,
                na,
            )?;
            let dynamics = KnrDynamics::random_truth(phi.clone(), 0.1, nh, vec![0.0, 0.0], 0.9, &mut rng)?;
            let features = StageMapped::new(
                StationaryFeatures {
                    features: phi,
                    horizon: nh,
                },
                projection_rows(nh, k, 3, &mut rng),
                k,
            )?;
            let probe = derive_seed(seed, 0x51A);
            let uniform = monte_carlo_embedding(&dynamics, &UniformActions(na), &features, 20_000, probe)?.into_vec();
            // a target beyond the reach of the uniform policy along a random direction
            let dir: Vec<f64> = (0..nh * k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let vertex: Vec<f64> = uniform.iter().zip(&dir).map(|(u, d)| u + 0.5 * d).collect();
            let env = Environment::Knr {
                dynamics,
                features,
                settings: KnrSettings::default(),
            };
            (env, uniform, vertex)
        }
    };
    let rounds = match options.env {
        MultiObjectiveEnv::Knr => 100,
        _ => 500,
    };
    let dim = uniform.len();
    if options.linear {
        // minimize Σ_i (ΞΨ)_i subject to Σ_i (ΞΨ)_i ≥ b with b below the
        // uniform policy's value, so the uniform policy is strictly feasible
        let ones = vec![1.0; dim];
        let at_uniform: f64 = uniform.iter().sum();
        let spread = (vertex.iter().sum::<f64>() - at_uniform).abs() + 1e-3;
        let level = at_uniform - 0.5 * spread;
        let g = ConvexOracle::affine(ones.iter().map(|v| -v).collect(), level);
        // f* ≥ b because f = −g + b on the feasible set
        let gamma_cap = bound_gamma(at_uniform, level, g.value(&uniform))?;
        let mut spec = base_spec(environment, ConvexOracle::linear(ones), rounds, seed);
        spec.constraint = Some(g);
        spec.gamma_cap = gamma_cap;
        return Ok(spec);
    }
    let gap = dist(&vertex, &uniform).max(1e-3);
    let g = ConvexOracle::signed_ball(uniform.clone(), 0.5 * gap)?;
    let f = ConvexOracle::dist_point(vertex);
    let gamma_cap = bound_gamma(f.value(&uniform), 0.0, g.value(&uniform))?;
    let mut spec = base_spec(environment, f, rounds, seed);
    spec.constraint = Some(g);
    spec.gamma_cap = gamma_cap;
    Ok(spec)
}
