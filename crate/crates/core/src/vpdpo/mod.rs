//! The episode loop: dual ascent on `(α, β, γ)` alternating with optimistic
//! planning against the linear cost `θ = α + β`.
//!
//! Iteration `t` logs the dual state `t` and the policy `π^t` planned with
//! it. The dual step then consumes the planned embedding `Ψ^t`, the
//! confidence set absorbs the data collected with `π^t`, and `π^{t+1}` is
//! planned. The last iteration stops after logging.

mod ground_truth;
mod metrics;

pub use ground_truth::{
    ground_truth_solve, GroundTruth, TruthMode, TruthOptions, DEFAULT_TRUTH_TOL, MAX_ENUMERATED_POLICIES,
};
pub use metrics::{regret_violation, MetricRow, RegretReport};

use crate::dualopt::{dual_step, DualState, StepMode, StepSchedule};
use crate::embedding::{
    embedding_of_policy, monte_carlo_embedding, rollout, FeatureMap, FiniteModel, KernelEmbedding, StageMapped,
    TabularFeatures,
};
use crate::error::{check_dim, Error, Result};
use crate::fenchel::ConvexOracle;
use crate::knr::{knr_radius_log, knr_sample_step, KnrDynamics, KnrEstimate, StationaryFeatures};
use crate::lowrank::{
    collect_augmented_tuples, confidence_members, l1_sq_empirical, lowrank_radius, mle_fit, ModelClass, StageDataset,
};
use crate::planner::{
    optimistic_plan_knr, optimistic_plan_lowrank, plan_known_model, GridPolicy, KnrPlanOptions, LowRankMode,
    PlannedModel, StagePolicy, DEFAULT_COMBINATION_BUDGET,
};
use crate::rng::{derive_seed, stage_rng};

/// Seed purposes; each gets an independent stream family.
const DATA: u64 = 1;
const PLAN: u64 = 2;
const TRUTH: u64 = 3;
const REALIZED: u64 = 4;

/// Privileged rollouts per episode when the true embedding has no closed form.
pub const DEFAULT_TRUTH_SAMPLES: usize = 100_000;

/// Cost features of a continuous-state environment.
pub type KnrCostFeatures = StageMapped<StationaryFeatures>;

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSettings {
    /// Constant `c` of the confidence radius.
    pub radius_constant: f64,
    pub mode: LowRankMode,
    pub budget: usize,
}

impl Default for LowRankSettings {
    fn default() -> Self {
        Self {
            radius_constant: 2.0,
            mode: LowRankMode::Enumerate,
            budget: DEFAULT_COMBINATION_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnrSettings {
    /// Ridge regularizer `λ`.
    pub lambda: f64,
    /// Grid planner knobs. `per_step_bound` is recomputed every episode from
    /// `θ` and the feature bound; `seed` is derived from the run seed.
    pub plan: KnrPlanOptions,
    /// Rollouts for the true embedding of each episode policy.
    pub truth_samples: usize,
}

impl Default for KnrSettings {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            plan: KnrPlanOptions::default(),
            truth_samples: DEFAULT_TRUTH_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    /// The learner knows the transition tensor.
    Known {
        model: FiniteModel,
        features: TabularFeatures,
    },
    /// The learner knows a finite class containing the truth.
    LowRank {
        class: ModelClass,
        features: TabularFeatures,
        settings: LowRankSettings,
    },
    /// The learner knows the features and noise level but not `W*`.
    Knr {
        dynamics: KnrDynamics,
        features: KnrCostFeatures,
        settings: KnrSettings,
    },
}

impl Environment {
    pub fn horizon(&self) -> usize {
        match self {
            Environment::Known { model, .. } => model.horizon(),
            Environment::LowRank { class, .. } => class.truth().horizon(),
            Environment::Knr { dynamics, .. } => dynamics.horizon(),
        }
    }

    /// Per-stage cost feature dimension.
    pub fn feature_dim(&self) -> usize {
        match self {
            Environment::Known { features, .. } | Environment::LowRank { features, .. } => features.dim(),
            Environment::Knr { features, .. } => features.dim(),
        }
    }

    /// Bound `B` on `‖ψ_h(s, a)‖`.
    pub fn feature_bound(&self) -> f64 {
        match self {
            Environment::Known { features, .. } | Environment::LowRank { features, .. } => features.bound(),
            Environment::Knr { features, .. } => features.bound(),
        }
    }

    /// The true finite model, when there is one.
    pub fn true_model(&self) -> Option<(&FiniteModel, &TabularFeatures)> {
        match self {
            Environment::Known { model, features } => Some((model, features)),
            Environment::LowRank { class, features, .. } => Some((class.truth(), features)),
            Environment::Knr { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Environment::Known { model, features } => check_tabular(model, features),
            Environment::LowRank {
                class,
                features,
                settings,
            } => {
                if !(settings.radius_constant > 0.0) {
                    return Err(Error::Config(format!(
                        "radius constant must be positive, got {}",
                        settings.radius_constant
                    )));
                }
                check_tabular(class.truth(), features)
            }
            Environment::Knr {
                dynamics,
                features,
                settings,
            } => {
                check_dim("cost feature horizon", dynamics.horizon(), features.horizon())?;
                check_dim(
                    "cost feature state",
                    dynamics.state_dim(),
                    features.inner().features.state_dim(),
                )?;
                if !(settings.lambda > 0.0) || settings.truth_samples == 0 || settings.plan.mc_samples == 0 {
                    return Err(Error::Config(
                        "ridge λ and both Monte Carlo sample counts must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

fn check_tabular(model: &FiniteModel, features: &TabularFeatures) -> Result<()> {
    check_dim("feature horizon", model.horizon(), features.horizon())?;
    check_dim("feature states", model.states(), features.states())?;
    check_dim("feature actions", model.actions(), features.actions())
}

/// A complete experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub environment: Environment,
    pub objective: ConvexOracle,
    /// `None` runs unconstrained: `β` and `γ` stay at zero.
    pub constraint: Option<ConvexOracle>,
    /// Cap `Γ` on the multiplier; the step-size scale when unconstrained.
    pub gamma_cap: f64,
    pub rounds: usize,
    pub delta: f64,
    pub step: StepMode,
    pub seed: u64,
    pub comparator: TruthOptions,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("δ must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.gamma_cap > 0.0) || !self.gamma_cap.is_finite() {
            return Err(Error::Config(format!(
                "Γ must be positive and finite, got {}",
                self.gamma_cap
            )));
        }
        self.environment.validate()?;
        let dim = self.environment.horizon() * self.environment.feature_dim();
        self.objective.validate()?;
        check_dim("objective dimension", dim, self.objective.dim())?;
        if let Some(g) = &self.constraint {
            g.validate()?;
            check_dim("constraint dimension", dim, g.dim())?;
        }
        if !(self.comparator.tol > 0.0) {
            return Err(Error::Config(format!(
                "comparator tolerance must be positive, got {}",
                self.comparator.tol
            )));
        }
        Ok(())
    }

    /// The constrained optimum on the true model; `None` for continuous
    /// environments.
    pub fn ground_truth(&self) -> Result<Option<GroundTruth>> {
        match self.environment.true_model() {
            None => Ok(None),
            Some((model, features)) => ground_truth_solve(
                model,
                features,
                &self.objective,
                self.constraint.as_ref(),
                &self.comparator,
            )
            .map(Some),
        }
    }
}

/// `Γ = −(f(Ψ^{π'}) − f(Ψ*))/g(Ψ^{π'})` for a Slater policy `π'`.
pub fn bound_gamma(f_at_slater: f64, f_at_opt: f64, g_at_slater: f64) -> Result<f64> {
    if !(g_at_slater < 0.0) {
        return Err(Error::Slater(g_at_slater));
    }
    Ok(-(f_at_slater - f_at_opt) / g_at_slater)
}

/// Log of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub t: usize,
    /// Dual state used to plan this episode's policy.
    pub dual: DualState,
    /// Planned value `V_1` under the optimistic model.
    pub plan_value: f64,
    pub plan_model: PlannedModel,
    /// `Ψ^t`, the embedding under the planning model.
    pub planned: KernelEmbedding,
    /// Embedding of `π^t` under the true dynamics.
    pub realized: KernelEmbedding,
    /// Standard error bound of `realized` (0 when exact).
    pub realized_stderr: f64,
    /// `ψ_h(s_h, a_h)` along one true-environment trajectory of `π^t`.
    pub trajectory: KernelEmbedding,
    /// `Ψ̂_t = (1/t)Σ_{i≤t} Ψ^i`
    pub planned_mean: KernelEmbedding,
    /// True embedding of the mixture of `π^1..π^t`.
    pub mixed: KernelEmbedding,
    pub f_hat: f64,
    pub g_hat: Option<f64>,
    pub f_mixed: f64,
    pub g_mixed: Option<f64>,
    /// Whether the confidence set used to plan `π^t` contained the truth.
    pub coverage: bool,
    /// Distance from the point estimate behind that set to the truth: the
    /// stage mean of the empirical `‖P̂_h − P*_h‖₁²` for low-rank models,
    /// `‖(Ŵ − W*)Λ^{1/2}‖₂²` for KNR. `None` for a known model or before any
    /// data.
    pub estimation_error: Option<f64>,
    pub warnings: Vec<String>,
}

/// Records of a run, with the error that stopped it early, if any.
#[derive(Debug)]
pub struct RunLog {
    pub records: Vec<EpisodeRecord>,
    pub failure: Option<Error>,
}

/// Runs the loop and fails on the first error.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<EpisodeRecord>> {
    let log = run_partial(spec);
    match log.failure {
        Some(e) => Err(e),
        None => Ok(log.records),
    }
}

/// Runs the loop, keeping the records made before any error.
pub fn run_partial(spec: &ExperimentSpec) -> RunLog {
    let mut records = Vec::new();
    let failure = spec.validate().and_then(|_| drive(spec, &mut records)).err();
    RunLog { records, failure }
}

/// Confidence-set state of the learner.
enum Learner<'a> {
    Known {
        model: &'a FiniteModel,
        features: &'a TabularFeatures,
    },
    LowRank {
        class: &'a ModelClass,
        features: &'a TabularFeatures,
        settings: &'a LowRankSettings,
        data: StageDataset,
        mle: Option<Vec<usize>>,
        members: Vec<Vec<usize>>,
    },
    Knr {
        dynamics: &'a KnrDynamics,
        features: &'a KnrCostFeatures,
        settings: &'a KnrSettings,
        estimate: KnrEstimate,
    },
}

enum Policy {
    Tabular(StagePolicy),
    Grid(GridPolicy),
}

struct Plan {
    policy: Policy,
    value: f64,
    model: PlannedModel,
    embedding: KernelEmbedding,
    warnings: Vec<String>,
}

impl<'a> Learner<'a> {
    fn new(spec: &'a ExperimentSpec) -> Result<Self> {
        Ok(match &spec.environment {
            Environment::Known { model, features } => Learner::Known { model, features },
            Environment::LowRank {
                class,
                features,
                settings,
            } => {
                let h = class.truth().horizon();
                Learner::LowRank {
                    class,
                    features,
                    settings,
                    data: StageDataset::new(h),
                    mle: None,
                    members: vec![(0..class.len()).collect(); h],
                }
            }
            Environment::Knr {
                dynamics,
                features,
                settings,
            } => {
                let mut estimate = KnrEstimate::new(dynamics.state_dim(), dynamics.features().dim(), settings.lambda)?;
                estimate.set_radius(knr_radius_log(
                    1,
                    dynamics.state_dim(),
                    settings.lambda,
                    dynamics.sigma(),
                    spec.delta,
                    0.0,
                )?);
                Learner::Knr {
                    dynamics,
                    features,
                    settings,
                    estimate,
                }
            }
        })
    }

    fn covers_truth(&self) -> bool {
        match self {
            Learner::Known { .. } => true,
            Learner::LowRank { class, members, .. } => members.iter().all(|m| m.contains(&class.true_index())),
            Learner::Knr { dynamics, estimate, .. } => estimate.contains(dynamics.w()),
        }
    }

    fn estimation_error(&self) -> Option<f64> {
        match self {
            Learner::Known { .. } => None,
            Learner::LowRank { class, data, mle, .. } => {
                let mle = mle.as_ref()?;
                let per_stage: Vec<f64> = (0..data.horizon())
                    .filter_map(|h| l1_sq_empirical(data.stage(h), h, class.model(mle[h]), class.truth()).ok())
                    .collect();
                Some(per_stage.iter().sum::<f64>() / per_stage.len() as f64)
            }
            Learner::Knr { dynamics, estimate, .. } => {
                (estimate.samples() > 0).then(|| estimate.ellipsoid_distance(dynamics.w()))
            }
        }
    }

    fn plan(&self, theta: &[f64], seed: u64, t: usize) -> Result<Plan> {
        let tabular = |r: crate::planner::PlanResult| Plan {
            policy: Policy::Tabular(r.policy),
            value: r.value,
            model: r.model,
            embedding: r.embedding,
            warnings: r.warnings,
        };
        Ok(match self {
            Learner::Known { model, features } => tabular(plan_known_model(model, theta, *features)?),
            Learner::LowRank {
                class,
                features,
                settings,
                members,
                ..
            } => tabular(optimistic_plan_lowrank(
                class,
                members,
                theta,
                *features,
                settings.mode,
                settings.budget,
            )?),
            Learner::Knr {
                dynamics,
                features,
                settings,
                estimate,
            } => {
                let d = features.dim();
                let largest = theta.chunks(d).map(crate::linalg::norm).fold(0.0, f64::max);
                let options = KnrPlanOptions {
                    per_step_bound: largest * features.bound(),
                    seed: derive_seed(derive_seed(seed, PLAN), t as u64),
                    ..settings.plan.clone()
                };
                let r = optimistic_plan_knr(dynamics, estimate, theta, *features, &options)?;
                Plan {
                    policy: Policy::Grid(r.policy),
                    value: r.value,
                    model: r.model,
                    embedding: r.embedding,
                    warnings: r.warnings,
                }
            }
        })
    }

    /// True embedding of the policy, with its standard error bound.
    fn realized(&self, policy: &Policy, seed: u64, t: usize) -> Result<(KernelEmbedding, f64)> {
        match (self, policy) {
            (Learner::Known { model, features }, Policy::Tabular(p)) => {
                Ok((embedding_of_policy(p, model, *features)?, 0.0))
            }
            (Learner::LowRank { class, features, .. }, Policy::Tabular(p)) => {
                Ok((embedding_of_policy(p, class.truth(), *features)?, 0.0))
            }
            (
                Learner::Knr {
                    dynamics,
                    features,
                    settings,
                    ..
                },
                Policy::Grid(p),
            ) => {
                let n = settings.truth_samples;
                let seed = derive_seed(derive_seed(seed, TRUTH), t as u64);
                let psi = monte_carlo_embedding(*dynamics, p, *features, n, seed)?;
                Ok((psi, features.bound() / (n as f64).sqrt()))
            }
            _ => unreachable!("planners return the policy type of their environment"),
        }
    }

    /// Per-stage features along one true trajectory.
    fn trajectory(&self, policy: &Policy, seed: u64, t: usize) -> Result<KernelEmbedding> {
        let seed = derive_seed(seed, REALIZED);
        let (nh, d) = match self {
            Learner::Known { features, .. } | Learner::LowRank { features, .. } => (features.horizon(), features.dim()),
            Learner::Knr { features, .. } => (features.horizon(), features.dim()),
        };
        let mut out = KernelEmbedding::zeros(nh, d);
        match (self, policy) {
            (Learner::Known { model, features }, Policy::Tabular(p)) => {
                for (h, (s, a)) in rollout(*model, p, seed, t as u64).into_iter().enumerate() {
                    features.eval_into(h, &s, a, out.block_mut(h));
                }
            }
            (Learner::LowRank { class, features, .. }, Policy::Tabular(p)) => {
                for (h, (s, a)) in rollout(class.truth(), p, seed, t as u64).into_iter().enumerate() {
                    features.eval_into(h, &s, a, out.block_mut(h));
                }
            }
            (Learner::Knr { dynamics, features, .. }, Policy::Grid(p)) => {
                for (h, (s, a)) in rollout::<_, _, [f64]>(*dynamics, p, seed, t as u64)
                    .into_iter()
                    .enumerate()
                {
                    features.eval_into(h, &s, a, out.block_mut(h));
                }
            }
            _ => unreachable!("planners return the policy type of their environment"),
        }
        Ok(out)
    }

    /// Collects episode `t` with `policy` and rebuilds the confidence set
    /// from the first `t` episodes.
    fn update(&mut self, policy: &Policy, spec: &ExperimentSpec, t: usize) -> Result<()> {
        let seed = derive_seed(spec.seed, DATA);
        match (self, policy) {
            (Learner::Known { .. }, _) => {}
            (
                Learner::LowRank {
                    class,
                    settings,
                    data,
                    mle: fitted,
                    members,
                    ..
                },
                Policy::Tabular(p),
            ) => {
                data.extend_episode(&collect_augmented_tuples(class.truth(), p, seed, t as u64));
                let mle = mle_fit(data, class);
                let (left, right) = class.factor_sizes();
                let radius = lowrank_radius(
                    t,
                    spec.rounds,
                    data.horizon(),
                    left,
                    right,
                    spec.delta,
                    settings.radius_constant,
                )?;
                *members = confidence_members(class, data, &mle, radius);
                *fitted = Some(mle);
            }
            (
                Learner::Knr {
                    dynamics,
                    settings,
                    estimate,
                    ..
                },
                Policy::Grid(p),
            ) => {
                let mut s = dynamics.initial().to_vec();
                for h in 0..dynamics.horizon() {
                    let mut rng = stage_rng(seed, t as u64, h as u64);
                    let a = p.action(h, &s);
                    let next = knr_sample_step(dynamics, &s, a, &mut rng);
                    estimate.push(&dynamics.features().eval(&s, a), &next);
                    s = next;
                }
                estimate.refit()?;
                let radius = knr_radius_log(
                    t,
                    dynamics.state_dim(),
                    settings.lambda,
                    dynamics.sigma(),
                    spec.delta,
                    estimate.log_det_ratio(),
                )?;
                estimate.set_radius(radius);
            }
            _ => unreachable!("planners return the policy type of their environment"),
        }
        Ok(())
    }
}

fn drive(spec: &ExperimentSpec, records: &mut Vec<EpisodeRecord>) -> Result<()> {
    let f = &spec.objective;
    let g = spec.constraint.as_ref();
    let nh = spec.environment.horizon();
    let d = spec.environment.feature_dim();
    let schedule = StepSchedule::new(spec.step, spec.gamma_cap, nh, spec.rounds)?;
    let mut learner = Learner::new(spec)?;
    let mut dual = DualState::initial(f, g, spec.gamma_cap)?;
    let mut plan = learner.plan(dual.theta(), spec.seed, 1)?;
    let mut coverage = learner.covers_truth();
    let mut estimation_error = learner.estimation_error();
    let mut planned_mean = KernelEmbedding::zeros(nh, d);
    let mut mixed = KernelEmbedding::zeros(nh, d);

    for t in 1..=spec.rounds {
        let (realized, realized_stderr) = learner.realized(&plan.policy, spec.seed, t)?;
        let trajectory = learner.trajectory(&plan.policy, spec.seed, t)?;
        let k = t as f64;
        running_mean(&mut planned_mean, &plan.embedding, k);
        running_mean(&mut mixed, &realized, k);
        records.push(EpisodeRecord {
            t,
            dual: dual.clone(),
            plan_value: plan.value,
            plan_model: plan.model.clone(),
            planned: plan.embedding.clone(),
            realized,
            realized_stderr,
            trajectory,
            f_hat: f.value(planned_mean.as_slice()),
            g_hat: g.map(|g| g.value(planned_mean.as_slice())),
            f_mixed: f.value(mixed.as_slice()),
            g_mixed: g.map(|g| g.value(mixed.as_slice())),
            planned_mean: planned_mean.clone(),
            mixed: mixed.clone(),
            coverage,
            estimation_error,
            warnings: std::mem::take(&mut plan.warnings),
        });
        if t == spec.rounds {
            break;
        }
        dual = dual_step(&dual, plan.embedding.as_slice(), f, g, schedule.eta(t))?;
        learner.update(&plan.policy, spec, t)?;
        coverage = learner.covers_truth();
        estimation_error = learner.estimation_error();
        plan = learner.plan(dual.theta(), spec.seed, t + 1)?;
    }
    Ok(())
}

fn running_mean(mean: &mut KernelEmbedding, x: &KernelEmbedding, k: f64) {
    for (m, v) in mean.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *m += (v - *m) / k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_bound_examples() {
        assert_eq!(bound_gamma(1.0, 1.0, -0.3).unwrap(), 0.0);
        assert_eq!(bound_gamma(2.0, 1.0, -0.5).unwrap(), 2.0);
        assert_eq!(bound_gamma(2.0, 1.0, -1.0).unwrap(), 1.0);
        assert!(matches!(bound_gamma(2.0, 1.0, 0.0), Err(Error::Slater(_))));
    }
}
