use serde::{Deserialize, Serialize};

use super::{FeatureMap, FiniteModel};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::planner::StagePolicy;

/// Per-stage state-action visitation probabilities `d_h(s, a)`, laid out
/// `[h][s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    horizon: usize,
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl OccupancyMeasure {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.values[(h * self.states + s) * self.actions + a]
    }

    /// The `[s][a]` table of stage `h`.
    pub fn stage(&self, h: usize) -> &[f64] {
        let n = self.states * self.actions;
        &self.values[h * n..(h + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Concatenated per-stage expected features `Ψ = (Ψ_1; …; Ψ_H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEmbedding {
    horizon: usize,
    dim: usize,
    values: Vec<f64>,
}

impl KernelEmbedding {
    pub fn new(horizon: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        check_dim("embedding", horizon * dim, values.len())?;
        Ok(Self { horizon, dim, values })
    }

    pub fn zeros(horizon: usize, dim: usize) -> Self {
        Self {
            horizon,
            dim,
            values: vec![0.0; horizon * dim],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Per-stage feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, h: usize) -> &[f64] {
        &self.values[h * self.dim..(h + 1) * self.dim]
    }

    pub fn block_mut(&mut self, h: usize) -> &mut [f64] {
        &mut self.values[h * self.dim..(h + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Inner product over the flat vector.
    pub fn dot(&self, theta: &[f64]) -> f64 {
        dot(&self.values, theta)
    }

    /// Largest block norm `max_h ‖Ψ_h‖₂`.
    pub fn max_block_norm(&self) -> f64 {
        (0..self.horizon).map(|h| norm(self.block(h))).fold(0.0, f64::max)
    }

    /// Uniform average of embeddings with equal shapes.
    pub fn mean(items: &[KernelEmbedding]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Argument("mean of no embeddings".into()))?;
        let mut out = Self::zeros(first.horizon, first.dim);
        let w = 1.0 / items.len() as f64;
        for e in items {
            check_dim("embedding", out.len(), e.len())?;
            axpy(&mut out.values, w, &e.values);
        }
        Ok(out)
    }
}

fn check_policy(policy: &StagePolicy, model: &FiniteModel) -> Result<()> {
    check_dim("policy horizon", model.horizon(), policy.horizon())?;
    check_dim("policy states", model.states(), policy.states())?;
    check_dim("policy actions", model.actions(), policy.actions())
}

/// Forward recursion `d_1 = δ_s̄ ⊗ π_1`,
/// `d_{h+1}(s', a') = π_{h+1}(a'|s') Σ_{s,a} P_h(s'|s,a) d_h(s,a)`.
pub fn compute_occupancy(policy: &StagePolicy, model: &FiniteModel) -> Result<OccupancyMeasure> {
    check_policy(policy, model)?;
    let (ns, na, nh) = (model.states(), model.actions(), model.horizon());
    let mut values = vec![0.0; nh * ns * na];
    let mut state_dist = vec![0.0; ns];
    state_dist[model.initial_state()] = 1.0;
    for h in 0..nh {
        let stage = &mut values[h * ns * na..(h + 1) * ns * na];
        for s in 0..ns {
            if state_dist[s] == 0.0 {
                continue;
            }
            for (a, p) in policy.probs(h, s).iter().enumerate() {
                stage[s * na + a] = state_dist[s] * p;
            }
        }
        if h + 1 < nh {
            let mut next = vec![0.0; ns];
            for s in 0..ns {
                for a in 0..na {
                    let w = stage[s * na + a];
                    if w != 0.0 {
                        axpy(&mut next, w, model.row(h, s, a));
                    }
                }
            }
            state_dist = next;
        }
    }
    Ok(OccupancyMeasure {
        horizon: nh,
        states: ns,
        actions: na,
        values,
    })
}

/// `Ψ_h = Σ_{s,a} d_h(s, a) ψ_h(s, a)`.
pub fn kernel_embedding<F: FeatureMap<usize>>(occ: &OccupancyMeasure, features: &F) -> Result<KernelEmbedding> {
    check_dim("feature horizon", occ.horizon, features.horizon())?;
    let d = features.dim();
    let mut out = KernelEmbedding::zeros(occ.horizon, d);
    let mut psi = vec![0.0; d];
    for h in 0..occ.horizon {
        for s in 0..occ.states {
            for a in 0..occ.actions {
                let w = occ.get(h, s, a);
                if w != 0.0 {
                    features.eval_into(h, &s, a, &mut psi);
                    axpy(out.block_mut(h), w, &psi);
                }
            }
        }
    }
    Ok(out)
}

/// Exact embedding of `policy` under `model`.
pub fn embedding_of_policy<F: FeatureMap<usize>>(
    policy: &StagePolicy,
    model: &FiniteModel,
    features: &F,
) -> Result<KernelEmbedding> {
    kernel_embedding(&compute_occupancy(policy, model)?, features)
}
