//! Cost construction, finite-horizon value iteration and optimistic
//! planners. Costs are minimized throughout.

mod knr;
mod lowrank;
mod policy;

pub use knr::{optimistic_plan_knr, GridPolicy, KnrPlanOptions, StateGrid};
pub use lowrank::{optimistic_plan_lowrank, LowRankMode, DEFAULT_COMBINATION_BUDGET};
pub use policy::StagePolicy;

use crate::embedding::{embedding_of_policy, FeatureMap, FiniteModel, KernelEmbedding};
use crate::error::{check_dim, Result};

/// Stage costs `c_h(s, a) = θ_h·ψ_h(s, a)` tabulated as `[h][s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCost {
    horizon: usize,
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl LinearCost {
    pub fn from_features<F: FeatureMap<usize>>(
        theta: &[f64],
        features: &F,
        states: usize,
        actions: usize,
    ) -> Result<Self> {
        let (nh, d) = (features.horizon(), features.dim());
        check_dim("cost direction", nh * d, theta.len())?;
        let mut psi = vec![0.0; d];
        let mut values = Vec::with_capacity(nh * states * actions);
        for h in 0..nh {
            let block = &theta[h * d..(h + 1) * d];
            for s in 0..states {
                for a in 0..actions {
                    features.eval_into(h, &s, a, &mut psi);
                    values.push(crate::linalg::dot(block, &psi));
                }
            }
        }
        Ok(Self {
            horizon: nh,
            states,
            actions,
            values,
        })
    }

    /// Costs from an explicit `[h][s][a]` table.
    pub fn from_table(horizon: usize, states: usize, actions: usize, values: Vec<f64>) -> Result<Self> {
        check_dim("cost table", horizon * states * actions, values.len())?;
        Ok(Self {
            horizon,
            states,
            actions,
            values,
        })
    }

    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.values[(h * self.states + s) * self.actions + a]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    fn check(&self, model: &FiniteModel) -> Result<()> {
        check_dim("cost horizon", model.horizon(), self.horizon)?;
        check_dim("cost states", model.states(), self.states)?;
        check_dim("cost actions", model.actions(), self.actions)
    }
}

/// Value and action-value tables; `v` has `H + 1` stages with `V_{H+1} ≡ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    pub states: usize,
    pub actions: usize,
    /// `[h][s]`, `h = 0..=H`
    pub v: Vec<f64>,
    /// `[h][s][a]`, `h = 0..H`
    pub q: Vec<f64>,
}

impl ValueTables {
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.states + s]
    }

    pub fn stage_values(&self, h: usize) -> &[f64] {
        &self.v[h * self.states..(h + 1) * self.states]
    }
}

/// Backward recursion `Q_h = c_h + P_h V_{h+1}`, `V_h = min_a Q_h` with the
/// greedy policy (ties to the lowest action).
pub fn value_iteration(model: &FiniteModel, cost: &LinearCost) -> Result<(ValueTables, StagePolicy)> {
    cost.check(model)?;
    let (ns, na, nh) = (model.states(), model.actions(), model.horizon());
    let mut v = vec![0.0; (nh + 1) * ns];
    let mut q = vec![0.0; nh * ns * na];
    let mut choice = vec![0; nh * ns];
    for h in (0..nh).rev() {
        let (head, tail) = v.split_at_mut((h + 1) * ns);
        let next = &tail[..ns];
        for s in 0..ns {
            let row = &mut q[(h * ns + s) * na..(h * ns + s + 1) * na];
            for (a, qa) in row.iter_mut().enumerate() {
                *qa = cost.get(h, s, a) + crate::linalg::dot(model.row(h, s, a), next);
            }
            let best = crate::linalg::argmin(row);
            choice[h * ns + s] = best;
            head[h * ns + s] = row[best];
        }
    }
    let policy = StagePolicy::deterministic(nh, ns, na, &choice)?;
    Ok((
        ValueTables {
            states: ns,
            actions: na,
            v,
            q,
        },
        policy,
    ))
}

/// Policy evaluation `V_h^π = Σ_a π_h(a|s)(c_h + P_h V_{h+1}^π)`.
pub fn evaluate_policy(model: &FiniteModel, cost: &LinearCost, policy: &StagePolicy) -> Result<ValueTables> {
    cost.check(model)?;
    check_dim("policy horizon", model.horizon(), policy.horizon())?;
    check_dim("policy states", model.states(), policy.states())?;
    check_dim("policy actions", model.actions(), policy.actions())?;
    let (ns, na, nh) = (model.states(), model.actions(), model.horizon());
    let mut v = vec![0.0; (nh + 1) * ns];
    let mut q = vec![0.0; nh * ns * na];
    for h in (0..nh).rev() {
        let (head, tail) = v.split_at_mut((h + 1) * ns);
        let next = &tail[..ns];
        for s in 0..ns {
            let mut vs = 0.0;
            for (a, p) in policy.probs(h, s).iter().enumerate() {
                let qa = cost.get(h, s, a) + crate::linalg::dot(model.row(h, s, a), next);
                q[(h * ns + s) * na + a] = qa;
                vs += p * qa;
            }
            head[h * ns + s] = vs;
        }
    }
    Ok(ValueTables {
        states: ns,
        actions: na,
        v,
        q,
    })
}

/// Which model a plan was made under.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannedModel {
    Known,
    /// Candidate index used at each stage.
    LowRank(Vec<usize>),
    /// Row-wise choice from the factored relaxation: `[h][s][a]` indices.
    LowRankRows(Vec<usize>),
    KnrEstimate,
}

/// A policy with its planned value `V_1(s̄)` and planned embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult<P = StagePolicy> {
    pub policy: P,
    pub model: PlannedModel,
    pub value: f64,
    pub embedding: KernelEmbedding,
    pub warnings: Vec<String>,
}

/// Exact planning on a known model.
pub fn plan_known_model<F: FeatureMap<usize>>(model: &FiniteModel, theta: &[f64], features: &F) -> Result<PlanResult> {
    let cost = LinearCost::from_features(theta, features, model.states(), model.actions())?;
    let (tables, policy) = value_iteration(model, &cost)?;
    let embedding = embedding_of_policy(&policy, model, features)?;
    Ok(PlanResult {
        value: tables.value(0, model.initial_state()),
        policy,
        model: PlannedModel::Known,
        embedding,
        warnings: Vec::new(),
    })
}

/// Both sides of the value-difference identity
/// `V_1^{π,P¹} − V_1^{π,P²} = E_{π,P²}[Σ_h (P¹_h − P²_h)(·|s_h, a_h)·V_{h+1}^{π,P¹}]`.
pub fn value_difference_check(
    model1: &FiniteModel,
    model2: &FiniteModel,
    cost: &LinearCost,
    policy: &StagePolicy,
) -> Result<(f64, f64)> {
    let v1 = evaluate_policy(model1, cost, policy)?;
    let v2 = evaluate_policy(model2, cost, policy)?;
    let s0 = model1.initial_state();
    let lhs = v1.value(0, s0) - v2.value(0, s0);
    let occ = crate::embedding::compute_occupancy(policy, model2)?;
    let mut rhs = 0.0;
    for h in 0..model1.horizon() {
        let next = v1.stage_values(h + 1);
        for s in 0..model1.states() {
            for a in 0..model1.actions() {
                let w = occ.get(h, s, a);
                if w != 0.0 {
                    let gap: f64 = model1
                        .row(h, s, a)
                        .iter()
                        .zip(model2.row(h, s, a))
                        .zip(next)
                        .map(|((p, q), v)| (p - q) * v)
                        .sum();
                    rhs += w * gap;
                }
            }
        }
    }
    Ok((lhs, rhs))
}
