//! TOML run configuration.
//!
//! ```toml
//! [environment]
//! kind = "known"
//! model = { kind = "random", states = 3, actions = 2, horizon = 3 }
//! features = { kind = "one_hot" }
//!
//! [objective]
//! kind = "dist_point"
//! target = [0.1, 0.2, ...]
//!
//! [constraint]            # optional
//! kind = "dist_point"
//! target = [...]
//! offset = -0.3
//!
//! [algorithm]
//! gamma_cap = 2.0
//! rounds = 500
//! delta = 0.1
//! step = "anytime"
//! seed = 1
//!
//! [sweep]
//! seeds = [1, 2, 3]
//! rounds = [250, 500]
//!
//! [output]
//! dir = "results"
//! emit_plots = true
//! ```
//!
//! A config may instead name a built-in `preset` at the top level, in which
//! case the environment, objective and constraint come from the preset and
//! `[algorithm]` entries override its defaults.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::presets::find_preset;
use crate::dualopt::StepMode;
use crate::embedding::{FiniteModel, StageMapped, TabularFeatures};
use crate::error::{Error, Result};
use crate::fenchel::ConvexOracle;
use crate::knr::{DynamicsFeatures, FeatureSpec, KnrDynamics, StationaryFeatures};
use crate::lowrank::ModelClass;
use crate::planner::{KnrPlanOptions, LowRankMode};
use crate::vpdpo::{Environment, ExperimentSpec, KnrSettings, LowRankSettings, TruthMode, TruthOptions};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub environment: Option<EnvironmentConfig>,
    pub objective: Option<ConvexOracle>,
    pub constraint: Option<ConvexOracle>,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub gamma_cap: Option<f64>,
    pub rounds: Option<usize>,
    pub delta: Option<f64>,
    pub step: Option<StepMode>,
    pub seed: Option<u64>,
    pub comparator: Option<TruthMode>,
    pub comparator_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seeds: Option<Vec<u64>>,
    pub rounds: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// File stem of the emitted files; defaults to the preset or `run`.
    pub name: Option<String>,
    #[serde(default)]
    pub emit_plots: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Known {
        model: ModelSource,
        features: TabularFeatureConfig,
        /// Seed of the random parts of the instance; defaults to the run seed.
        seed: Option<u64>,
    },
    #[serde(rename = "lowrank")]
    LowRank {
        class: ClassSource,
        features: TabularFeatureConfig,
        radius_constant: Option<f64>,
        mode: Option<LowRankMode>,
        budget: Option<usize>,
        seed: Option<u64>,
    },
    Knr {
        state_dim: usize,
        actions: usize,
        horizon: usize,
        sigma: f64,
        initial: Option<Vec<f64>>,
        /// Row-major `state_dim × feature_dim` matrix with `‖W‖₂ ≤ 1`.
        matrix: Option<Vec<f64>>,
        /// Spectral norm of a random matrix when `matrix` is absent.
        matrix_scale: Option<f64>,
        features: FeatureSpec,
        /// Per-stage row-major `cost_dim × feature_dim` maps of the cost features.
        cost_maps: Option<Vec<Vec<f64>>>,
        cost_dim: Option<usize>,
        lambda: Option<f64>,
        nodes: Option<usize>,
        kappa: Option<f64>,
        plan_samples: Option<usize>,
        truth_samples: Option<usize>,
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Random {
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default)]
        initial_state: usize,
    },
    /// `P_h(s'|s, a)` flattened in `(h, s, a, s')` order.
    Explicit {
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default)]
        initial_state: usize,
        transitions: Vec<f64>,
    },
    /// A model in the whitespace text format.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSource {
    /// Products of random left and right factors.
    Random {
        states: usize,
        actions: usize,
        horizon: usize,
        rank: usize,
        left: usize,
        right: usize,
        #[serde(default)]
        initial_state: usize,
    },
    /// Random perturbations of a base model.
    Perturbations {
        base: ModelSource,
        count: usize,
        magnitude: f64,
        true_index: usize,
    },
    Explicit {
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default)]
        initial_state: usize,
        transitions: Vec<Vec<f64>>,
        true_index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TabularFeatureConfig {
    OneHot {
        maps: Option<Vec<Vec<f64>>>,
        out_dim: Option<usize>,
    },
    Random {
        dim: usize,
        #[serde(default = "unit")]
        bound: f64,
        maps: Option<Vec<Vec<f64>>>,
        out_dim: Option<usize>,
    },
    /// `ψ_h(s, a)` flattened in `(h, s, a, i)` order.
    Table {
        dim: usize,
        values: Vec<f64>,
        maps: Option<Vec<Vec<f64>>>,
        out_dim: Option<usize>,
    },
}

fn unit() -> f64 {
    1.0
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Outputs are named after the file unless
    /// `output.name` says otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if config.output.name.is_none() {
            config.output.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(config)
    }

    /// A config that only names a preset.
    pub fn from_preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            environment: None,
            objective: None,
            constraint: None,
            algorithm: AlgorithmConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// File stem of the outputs.
    pub fn name(&self) -> String {
        self.output
            .name
            .clone()
            .or_else(|| self.preset.clone())
            .unwrap_or_else(|| "run".to_string())
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        match &self.sweep.seeds {
            Some(s) if s.is_empty() => Err(Error::Config("sweep.seeds must not be empty".into())),
            Some(s) => Ok(s.clone()),
            None => Ok(vec![self.algorithm.seed.unwrap_or(0)]),
        }
    }

    /// Round counts of a sweep; `None` keeps the spec's own.
    pub fn round_list(&self) -> Result<Vec<Option<usize>>> {
        match &self.sweep.rounds {
            Some(r) if r.is_empty() => Err(Error::Config("sweep.rounds must not be empty".into())),
            Some(r) => Ok(r.iter().map(|t| Some(*t)).collect()),
            None => Ok(vec![self.algorithm.rounds]),
        }
    }

    /// The experiment for one seed.
    pub fn build(&self, seed: u64, config_dir: Option<&Path>) -> Result<ExperimentSpec> {
        let mut spec = match &self.preset {
            Some(name) => {
                if self.environment.is_some() || self.objective.is_some() || self.constraint.is_some() {
                    return Err(Error::Config(
                        "a preset config cannot also set environment, objective or constraint".into(),
                    ));
                }
                (find_preset(name)?.build)(seed)?
            }
            None => {
                let env = self
                    .environment
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing [environment] section".into()))?;
                let objective = self
                    .objective
                    .clone()
                    .ok_or_else(|| Error::Config("missing [objective] section".into()))?;
                ExperimentSpec {
                    environment: env.build(seed, config_dir)?,
                    objective,
                    constraint: self.constraint.clone(),
                    gamma_cap: 1.0,
                    rounds: 100,
                    delta: 0.1,
                    step: StepMode::Anytime,
                    seed,
                    comparator: TruthOptions::default(),
                }
            }
        };
        let a = &self.algorithm;
        spec.seed = seed;
        if let Some(v) = a.gamma_cap {
            spec.gamma_cap = v;
        }
        if let Some(v) = a.rounds {
            spec.rounds = v;
        }
        if let Some(v) = a.delta {
            spec.delta = v;
        }
        if let Some(v) = a.step {
            spec.step = v;
        }
        if let Some(v) = a.comparator {
            spec.comparator.mode = v;
        }
        if let Some(v) = a.comparator_tol {
            spec.comparator.tol = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl ModelSource {
    fn build(&self, rng: &mut ChaCha8Rng, config_dir: Option<&Path>) -> Result<FiniteModel> {
        match self {
            ModelSource::Random {
                states,
                actions,
                horizon,
                initial_state,
            } => FiniteModel::random(*states, *actions, *horizon, *initial_state, rng),
            ModelSource::Explicit {
                states,
                actions,
                horizon,
                initial_state,
                transitions,
            } => FiniteModel::new(*states, *actions, *horizon, transitions.clone(), *initial_state),
            ModelSource::File { path } => {
                let full = match config_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", full.display())))?;
                FiniteModel::parse(&text)
            }
        }
    }
}

impl ClassSource {
    fn build(&self, rng: &mut ChaCha8Rng, config_dir: Option<&Path>) -> Result<ModelClass> {
        match self {
            ClassSource::Random {
                states,
                actions,
                horizon,
                rank,
                left,
                right,
                initial_state,
            } => ModelClass::random(*states, *actions, *horizon, *rank, *initial_state, *left, *right, rng),
            ClassSource::Perturbations {
                base,
                count,
                magnitude,
                true_index,
            } => {
                let base = base.build(rng, config_dir)?;
                ModelClass::perturbations(&base, *count, *magnitude, *true_index, rng)
            }
            ClassSource::Explicit {
                states,
                actions,
                horizon,
                initial_state,
                transitions,
                true_index,
            } => {
                let models = transitions
                    .iter()
                    .map(|t| FiniteModel::new(*states, *actions, *horizon, t.clone(), *initial_state))
                    .collect::<Result<Vec<_>>>()?;
                ModelClass::from_models(models, *true_index)
            }
        }
    }
}

impl TabularFeatureConfig {
    fn build(&self, model: &FiniteModel, rng: &mut ChaCha8Rng) -> Result<TabularFeatures> {
        let (ns, na, nh) = (model.states(), model.actions(), model.horizon());
        let (base, maps, out_dim) = match self {
            TabularFeatureConfig::OneHot { maps, out_dim } => (TabularFeatures::one_hot(nh, ns, na), maps, out_dim),
            TabularFeatureConfig::Random {
                dim,
                bound,
                maps,
                out_dim,
            } => (TabularFeatures::random(nh, ns, na, *dim, *bound, rng)?, maps, out_dim),
            TabularFeatureConfig::Table {
                dim,
                values,
                maps,
                out_dim,
            } => (
                TabularFeatures::from_table(nh, ns, na, *dim, values.clone())?,
                maps,
                out_dim,
            ),
        };
        match (maps, out_dim) {
            (None, None) => Ok(base),
            (Some(m), Some(k)) => base.mapped(m, *k),
            _ => Err(Error::Config(
                "feature `maps` and `out_dim` must be given together".into(),
            )),
        }
    }
}

impl EnvironmentConfig {
    pub fn build(&self, run_seed: u64, config_dir: Option<&Path>) -> Result<Environment> {
        match self {
            EnvironmentConfig::Known { model, features, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(run_seed));
                let model = model.build(&mut rng, config_dir)?;
                let features = features.build(&model, &mut rng)?;
                Ok(Environment::Known { model, features })
            }
            EnvironmentConfig::LowRank {
                class,
                features,
                radius_constant,
                mode,
                budget,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(run_seed));
                let class = class.build(&mut rng, config_dir)?;
                let features = features.build(class.truth(), &mut rng)?;
                let defaults = LowRankSettings::default();
                Ok(Environment::LowRank {
                    class,
                    features,
                    settings: LowRankSettings {
                        radius_constant: radius_constant.unwrap_or(defaults.radius_constant),
                        mode: mode.unwrap_or(defaults.mode),
                        budget: budget.unwrap_or(defaults.budget),
                    },
                })
            }
            EnvironmentConfig::Knr {
                state_dim,
                actions,
                horizon,
                sigma,
                initial,
                matrix,
                matrix_scale,
                features,
                cost_maps,
                cost_dim,
                lambda,
                nodes,
                kappa,
                plan_samples,
                truth_samples,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(run_seed));
                let phi = DynamicsFeatures::new(features, *state_dim, *actions)?;
                let initial = initial.clone().unwrap_or_else(|| vec![0.0; *state_dim]);
                let dynamics = match matrix {
                    Some(m) => {
                        if m.len() != state_dim * phi.dim() {
                            return Err(Error::Config(format!(
                                "environment.matrix has {} entries, expected {}",
                                m.len(),
                                state_dim * phi.dim()
                            )));
                        }
                        let w = DMatrix::from_row_slice(*state_dim, phi.dim(), m);
                        KnrDynamics::truth(w, phi.clone(), *sigma, *horizon, initial)?
                    }
                    None => KnrDynamics::random_truth(
                        phi.clone(),
                        *sigma,
                        *horizon,
                        initial,
                        matrix_scale.unwrap_or(0.9),
                        &mut rng,
                    )?,
                };
                let stationary = StationaryFeatures {
                    features: phi,
                    horizon: *horizon,
                };
                let cost = match (cost_maps, cost_dim) {
                    (None, None) => StageMapped::identity(stationary),
                    (Some(m), Some(k)) => StageMapped::new(stationary, m.clone(), *k)?,
                    _ => {
                        return Err(Error::Config(
                            "environment.cost_maps and cost_dim must be given together".into(),
                        ))
                    }
                };
                let defaults = KnrSettings::default();
                Ok(Environment::Knr {
                    dynamics,
                    features: cost,
                    settings: KnrSettings {
                        lambda: lambda.unwrap_or(defaults.lambda),
                        plan: KnrPlanOptions {
                            nodes: *nodes,
                            kappa: kappa.unwrap_or(defaults.plan.kappa),
                            mc_samples: plan_samples.unwrap_or(defaults.plan.mc_samples),
                            ..defaults.plan
                        },
                        truth_samples: truth_samples.unwrap_or(defaults.truth_samples),
                    },
                })
            }
        }
    }
}
