//! Finite low-rank model classes, maximum-likelihood selection and
//! confidence sets from augmented data.
//!
//! A candidate transition is `P_h(s'|s, a) = Σ_k φ_h(s, a)_k μ_h(k, s')` with
//! `φ_h(s, a)` on the simplex and each `μ_h(k, ·)` a distribution. Candidates
//! are materialized as dense tensors when the class is built.

use rand::Rng;

use crate::embedding::{inverse_cdf, normalize_row, FiniteModel};
use crate::error::{Error, Result};
use crate::planner::StagePolicy;
use crate::rng::stage_rng;

const LOG_FLOOR: f64 = 1e-300;

/// Left factors `φ_h(s, a) ∈ Δ(d)`, laid out `[h][s][a][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftFactor(pub Vec<f64>);

/// Right factors `μ_h(k, ·) ∈ Δ(S)`, laid out `[h][k][s']`.
#[derive(Debug, Clone, PartialEq)]
pub struct RightFactor(pub Vec<f64>);

/// A finite set of candidate transition tensors sharing `(S, A, H)` and
/// the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelClass {
    models: Vec<FiniteModel>,
    true_index: usize,
    left_size: usize,
    right_size: usize,
}

impl ModelClass {
    /// Explicit candidates; counted as `|Θ| = len`, `|Υ| = 1`.
    pub fn from_models(models: Vec<FiniteModel>, true_index: usize) -> Result<Self> {
        let n = models.len();
        Self::assemble(models, true_index, n, 1)
    }

    fn assemble(models: Vec<FiniteModel>, true_index: usize, left_size: usize, right_size: usize) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::Config("model class is empty".into()))?;
        if true_index >= models.len() {
            return Err(Error::Config(format!(
                "true model index {true_index} out of range for {} candidates",
                models.len()
            )));
        }
        let shape = (first.states(), first.actions(), first.horizon(), first.initial_state());
        if models
            .iter()
            .any(|m| (m.states(), m.actions(), m.horizon(), m.initial_state()) != shape)
        {
            return Err(Error::Config("candidates disagree on (S, A, H, initial state)".into()));
        }
        Ok(Self {
            models,
            true_index,
            left_size,
            right_size,
        })
    }

    /// Every pair in `lefts × rights`, indexed `i·|Υ| + j`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_factors(
        states: usize,
        actions: usize,
        horizon: usize,
        rank: usize,
        initial_state: usize,
        lefts: &[LeftFactor],
        rights: &[RightFactor],
        true_pair: (usize, usize),
    ) -> Result<Self> {
        let mut models = Vec::with_capacity(lefts.len() * rights.len());
        for phi in lefts {
            crate::error::check_dim("left factor", horizon * states * actions * rank, phi.0.len())?;
            for mu in rights {
                crate::error::check_dim("right factor", horizon * rank * states, mu.0.len())?;
                let mut t = vec![0.0; horizon * states * actions * states];
                for h in 0..horizon {
                    for sa in 0..states * actions {
                        let w = &phi.0[(h * states * actions + sa) * rank..][..rank];
                        let row = &mut t[(h * states * actions + sa) * states..][..states];
                        for (k, wk) in w.iter().enumerate() {
                            let m = &mu.0[(h * rank + k) * states..][..states];
                            crate::linalg::axpy(row, *wk, m);
                        }
                    }
                }
                models.push(FiniteModel::new(states, actions, horizon, t, initial_state)?);
            }
        }
        let index = true_pair.0 * rights.len() + true_pair.1;
        Self::assemble(models, index, lefts.len(), rights.len())
    }

    /// Random factor sets with flat-Dirichlet rows and a uniformly drawn
    /// true pair.
    #[allow(clippy::too_many_arguments)]
    pub fn random<R: Rng + ?Sized>(
        states: usize,
        actions: usize,
        horizon: usize,
        rank: usize,
        initial_state: usize,
        left_size: usize,
        right_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if rank == 0 || left_size == 0 || right_size == 0 {
            return Err(Error::Config("rank and factor counts must be positive".into()));
        }
        let mut simplex_rows = |rows: usize, len: usize| -> Vec<f64> {
            (0..rows)
                .flat_map(|_| normalize_row((0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect()))
                .collect()
        };
        let lefts: Vec<LeftFactor> = (0..left_size)
            .map(|_| LeftFactor(simplex_rows(horizon * states * actions, rank)))
            .collect();
        let rights: Vec<RightFactor> = (0..right_size)
            .map(|_| RightFactor(simplex_rows(horizon * rank, states)))
            .collect();
        let pair = (rng.random_range(0..left_size), rng.random_range(0..right_size));
        Self::from_factors(states, actions, horizon, rank, initial_state, &lefts, &rights, pair)
    }

    /// `count` mixtures `(1 − m)·base + m·random` with `m = magnitude`; the
    /// base itself is not included unless `magnitude = 0`.
    pub fn perturbations<R: Rng + ?Sized>(
        base: &FiniteModel,
        count: usize,
        magnitude: f64,
        true_index: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&magnitude) {
            return Err(Error::Config(format!(
                "perturbation magnitude must lie in [0, 1], got {magnitude}"
            )));
        }
        let (ns, na, nh) = (base.states(), base.actions(), base.horizon());
        let mut models = Vec::with_capacity(count);
        for _ in 0..count {
            let noise = FiniteModel::random(ns, na, nh, base.initial_state(), rng)?;
            let t = base
                .transitions()
                .iter()
                .zip(noise.transitions())
                .map(|(b, n)| (1.0 - magnitude) * b + magnitude * n)
                .collect::<Vec<_>>();
            let rows: Vec<f64> = t.chunks(ns).flat_map(|r| normalize_row(r.to_vec())).collect();
            models.push(FiniteModel::new(ns, na, nh, rows, base.initial_state())?);
        }
        Self::from_models(models, true_index)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[FiniteModel] {
        &self.models
    }

    pub fn model(&self, i: usize) -> &FiniteModel {
        &self.models[i]
    }

    /// Index of the data-generating model; only the harness should read it.
    pub fn true_index(&self) -> usize {
        self.true_index
    }

    pub fn truth(&self) -> &FiniteModel {
        &self.models[self.true_index]
    }

    /// `(|Θ|, |Υ|)`
    pub fn factor_sizes(&self) -> (usize, usize) {
        (self.left_size, self.right_size)
    }
}

/// Per-stage `(s, a, s')` tuples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageDataset {
    stages: Vec<Vec<(usize, usize, usize)>>,
}

impl StageDataset {
    pub fn new(horizon: usize) -> Self {
        Self {
            stages: vec![Vec::new(); horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, h: usize) -> &[(usize, usize, usize)] {
        &self.stages[h]
    }

    pub fn push(&mut self, h: usize, tuple: (usize, usize, usize)) {
        self.stages[h].push(tuple);
    }

    /// Appends one tuple per stage.
    pub fn extend_episode(&mut self, tuples: &[(usize, usize, usize)]) {
        for (h, t) in tuples.iter().enumerate() {
            self.stages[h].push(*t);
        }
    }
}

/// One tuple per stage: for stage `h`, a fresh rollout follows `policy` for
/// `h` steps, then draws `a_h` uniformly and `s' ~ P_h(·|s_h, a_h)`.
/// Stage `h` uses the random stream `(seed, episode, h)`.
pub fn collect_augmented_tuples(
    truth: &FiniteModel,
    policy: &StagePolicy,
    seed: u64,
    episode: u64,
) -> Vec<(usize, usize, usize)> {
    let na = truth.actions();
    (0..truth.horizon())
        .map(|h| {
            let mut rng = stage_rng(seed, episode, h as u64);
            let mut s = truth.initial_state();
            for i in 0..h {
                let a = inverse_cdf(policy.probs(i, s), rng.random());
                s = truth.sample_next(i, s, a, rng.random());
            }
            let a = rng.random_range(0..na);
            (s, a, truth.sample_next(h, s, a, rng.random()))
        })
        .collect()
}

fn log_likelihood(model: &FiniteModel, h: usize, data: &[(usize, usize, usize)]) -> f64 {
    data.iter()
        .map(|&(s, a, n)| model.prob(h, s, a, n).max(LOG_FLOOR).ln())
        .sum()
}

/// Per-stage maximum-likelihood candidate; ties and empty stages go to the
/// lowest index.
pub fn mle_fit(dataset: &StageDataset, class: &ModelClass) -> Vec<usize> {
    (0..dataset.horizon())
        .map(|h| {
            let scores: Vec<f64> = class
                .models
                .iter()
                .map(|m| -log_likelihood(m, h, dataset.stage(h)))
                .collect();
            crate::linalg::argmin(&scores)
        })
        .collect()
}

/// Mean of `‖P₁(·|s, a) − P₂(·|s, a)‖₁²` over the visited `(s, a)` of one
/// stage.
pub fn l1_sq_empirical(data: &[(usize, usize, usize)], h: usize, p1: &FiniteModel, p2: &FiniteModel) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Argument("empirical distance over an empty dataset".into()));
    }
    let total: f64 = data
        .iter()
        .map(|&(s, a, _)| {
            let l1: f64 = p1
                .row(h, s, a)
                .iter()
                .zip(p2.row(h, s, a))
                .map(|(x, y)| (x - y).abs())
                .sum();
            l1 * l1
        })
        .sum();
    Ok(total / data.len() as f64)
}

/// `c·ln(T·H·|Υ|·|Θ|/δ)/t`
pub fn lowrank_radius(
    t: usize,
    rounds: usize,
    horizon: usize,
    left_size: usize,
    right_size: usize,
    delta: f64,
    c: f64,
) -> Result<f64> {
    if t == 0 || !(delta > 0.0) {
        return Err(Error::Config(format!(
            "radius needs t ≥ 1 and δ > 0 (got t={t}, δ={delta})"
        )));
    }
    let count = rounds as f64 * horizon as f64 * left_size as f64 * right_size as f64;
    Ok(c * (count / delta).ln() / t as f64)
}

/// Per-stage candidates within empirical squared-L1 distance `radius` of the
/// MLE. A stage without data keeps every candidate.
pub fn confidence_members(class: &ModelClass, dataset: &StageDataset, mle: &[usize], radius: f64) -> Vec<Vec<usize>> {
    (0..dataset.horizon())
        .map(|h| {
            let data = dataset.stage(h);
            if data.is_empty() {
                return (0..class.len()).collect();
            }
            let center = class.model(mle[h]);
            (0..class.len())
                .filter(|&i| i == mle[h] || l1_sq_empirical(data, h, center, class.model(i)).is_ok_and(|d| d <= radius))
                .collect()
        })
        .collect()
}
