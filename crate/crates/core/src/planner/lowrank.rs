use serde::{Deserialize, Serialize};

use super::{value_iteration, LinearCost, PlanResult, PlannedModel, StagePolicy};
use crate::embedding::{embedding_of_policy, FeatureMap, FiniteModel};
use crate::error::{check_dim, Error, Result};
use crate::lowrank::ModelClass;

/// Default cap on the number of per-stage model combinations enumerated.
pub const DEFAULT_COMBINATION_BUDGET: usize = 10_000;

/// How the joint minimum over policies and confidence-set models is taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowRankMode {
    /// Exact: value iteration for every combination of per-stage members.
    #[default]
    Enumerate,
    /// Relaxation: the Bellman backup takes the minimum over members
    /// separately for every `(h, s, a)` row. Its value is a lower bound on
    /// the exact one, since the set of row-wise choices is larger than the
    /// set of per-stage choices.
    Factored,
}

/// `argmin_π min_{P ∈ C} V_1^{π,P}` with `C` the product of per-stage
/// member sets.
pub fn optimistic_plan_lowrank<F: FeatureMap<usize>>(
    class: &ModelClass,
    members: &[Vec<usize>],
    theta: &[f64],
    features: &F,
    mode: LowRankMode,
    budget: usize,
) -> Result<PlanResult> {
    let first = class.model(0);
    check_dim("member stages", first.horizon(), members.len())?;
    if let Some(h) = members.iter().position(|m| m.is_empty()) {
        return Err(Error::Argument(format!("stage {h} has no confidence-set members")));
    }
    if members.iter().flatten().any(|&i| i >= class.len()) {
        return Err(Error::Argument("member index outside the model class".into()));
    }
    let cost = LinearCost::from_features(theta, features, first.states(), first.actions())?;
    match mode {
        LowRankMode::Enumerate => enumerate(class, members, &cost, features, budget),
        LowRankMode::Factored => factored(class, members, &cost, features),
    }
}

fn enumerate<F: FeatureMap<usize>>(
    class: &ModelClass,
    members: &[Vec<usize>],
    cost: &LinearCost,
    features: &F,
    budget: usize,
) -> Result<PlanResult> {
    let combos = members
        .iter()
        .try_fold(1usize, |acc, m| acc.checked_mul(m.len()))
        .filter(|&n| n <= budget)
        .ok_or_else(|| {
            Error::Budget(format!(
                "{} member combinations exceed the budget of {budget}; use a smaller model class",
                members
                    .iter()
                    .map(|m| m.len().to_string())
                    .collect::<Vec<_>>()
                    .join("×")
            ))
        })?;
    let mut digits = vec![0usize; members.len()];
    let mut best: Option<(f64, Vec<usize>, StagePolicy, FiniteModel)> = None;
    for _ in 0..combos {
        let chosen: Vec<usize> = digits.iter().zip(members).map(|(d, m)| m[*d]).collect();
        let sources: Vec<&FiniteModel> = chosen.iter().map(|&i| class.model(i)).collect();
        let model = FiniteModel::splice(&sources)?;
        let (tables, policy) = value_iteration(&model, cost)?;
        let value = tables.value(0, model.initial_state());
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, chosen, policy, model));
        }
        // odometer over per-stage member lists, last stage fastest
        for h in (0..digits.len()).rev() {
            digits[h] += 1;
            if digits[h] < members[h].len() {
                break;
            }
            digits[h] = 0;
        }
    }
    let (value, chosen, policy, model) = best.expect("at least one combination");
    Ok(PlanResult {
        embedding: embedding_of_policy(&policy, &model, features)?,
        policy,
        model: PlannedModel::LowRank(chosen),
        value,
        warnings: Vec::new(),
    })
}

fn factored<F: FeatureMap<usize>>(
    class: &ModelClass,
    members: &[Vec<usize>],
    cost: &LinearCost,
    features: &F,
) -> Result<PlanResult> {
    let first = class.model(0);
    let (ns, na, nh) = (first.states(), first.actions(), first.horizon());
    let mut v_next = vec![0.0; ns];
    let mut rows = vec![0usize; nh * ns * na];
    let mut choice = vec![0usize; nh * ns];
    for h in (0..nh).rev() {
        let mut v = vec![0.0; ns];
        for s in 0..ns {
            let mut q = vec![0.0; na];
            for (a, qa) in q.iter_mut().enumerate() {
                let cont: Vec<f64> = members[h]
                    .iter()
                    .map(|&m| crate::linalg::dot(class.model(m).row(h, s, a), &v_next))
                    .collect();
                let k = crate::linalg::argmin(&cont);
                rows[(h * ns + s) * na + a] = members[h][k];
                *qa = cost.get(h, s, a) + cont[k];
            }
            let a = crate::linalg::argmin(&q);
            choice[h * ns + s] = a;
            v[s] = q[a];
        }
        v_next = v;
    }
    let mut t = Vec::with_capacity(nh * ns * na * ns);
    for h in 0..nh {
        for s in 0..ns {
            for a in 0..na {
                t.extend_from_slice(class.model(rows[(h * ns + s) * na + a]).row(h, s, a));
            }
        }
    }
    let model = FiniteModel::new(ns, na, nh, t, first.initial_state())?;
    let policy = StagePolicy::deterministic(nh, ns, na, &choice)?;
    Ok(PlanResult {
        embedding: embedding_of_policy(&policy, &model, features)?,
        policy,
        model: PlannedModel::LowRankRows(rows),
        value: v_next[first.initial_state()],
        warnings: Vec::new(),
    })
}
