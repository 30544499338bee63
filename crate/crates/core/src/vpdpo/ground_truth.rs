//! Brute-force constrained optimum over the embeddings of a finite model.
//!
//! The embeddings of all Markov policies form the convex hull of the
//! deterministic-policy embeddings. The solver works on convex weights over
//! an active set of vertices, grown by a linear minimization oracle over the
//! hull: an exact scan of the enumerated vertices, or value iteration.
//!
//! The distance-type oracles are replaced by smooth surrogates with the same
//! minimizers and feasible sets (`½‖x − p‖²`, `½(‖x − c‖ − r)₊²`,
//! `½(‖x − c‖² − r²) ≤ 0`). The constraint is handled by an augmented
//! Lagrangian whose penalty grows from 1 to 10⁴ when the violation stalls.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embedding::{embedding_of_policy, FiniteModel, KernelEmbedding, TabularFeatures};
use crate::error::{Error, Result};
use crate::fenchel::ConvexOracle;
use crate::linalg::{axpy, dot, norm, sub};
use crate::planner::{plan_known_model, StagePolicy};

pub const DEFAULT_TRUTH_TOL: f64 = 1e-7;
/// Largest `A^{S·H}` accepted by the enumeration mode.
pub const MAX_ENUMERATED_POLICIES: u128 = 100_000;

const MAX_OUTER: usize = 400;
const MAX_INNER: usize = 200_000;
const ROUND_ITERS: usize = 2_000;
const MAX_NEWTON: usize = 100;
const MAX_PENALTY: f64 = 1e4;
const MAX_ACTIVE: usize = 5_000;
const STALL_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMode {
    /// All deterministic policies are enumerated.
    #[default]
    Enumerate,
    /// Vertices are generated by value iteration as needed.
    FrankWolfe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthOptions {
    pub mode: TruthMode,
    pub tol: f64,
}

impl Default for TruthOptions {
    fn default() -> Self {
        Self {
            mode: TruthMode::Enumerate,
            tol: DEFAULT_TRUTH_TOL,
        }
    }
}

/// Constrained optimum with its mixture certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub embedding: KernelEmbedding,
    /// `f(Ψ*)`
    pub value: f64,
    /// `g(Ψ*)`, when constrained.
    pub constraint_value: Option<f64>,
    /// Multiplier of the smoothed constraint.
    pub multiplier: f64,
    /// Mixture weights over `policies`.
    pub weights: Vec<f64>,
    /// Deterministic `[h][s]` action tables of the mixture.
    pub policies: Vec<Vec<usize>>,
    /// Largest decrease of the Lagrangian's linearization over any vertex.
    pub gap: f64,
    pub mode: TruthMode,
}

/// Smooth surrogate of an objective.
fn objective_surrogate(f: &ConvexOracle, x: &[f64]) -> (f64, Vec<f64>) {
    match f {
        ConvexOracle::Linear { c, offset } => (dot(c, x) + offset, c.clone()),
        ConvexOracle::DistPoint { target, .. } => {
            let d = sub(x, target);
            (0.5 * dot(&d, &d), d)
        }
        ConvexOracle::DistBall { center, radius } => {
            let d = sub(x, center);
            let n = norm(&d);
            let excess = (n - radius).max(0.0);
            if excess > 0.0 {
                (0.5 * excess * excess, d.iter().map(|v| excess * v / n).collect())
            } else {
                (0.0, vec![0.0; x.len()])
            }
        }
    }
}

/// Smooth constraint function with the same zero sublevel set.
fn constraint_surrogate(g: &ConvexOracle, x: &[f64]) -> (f64, Vec<f64>) {
    match g {
        ConvexOracle::Linear { c, offset } => (dot(c, x) + offset, c.clone()),
        ConvexOracle::DistPoint { target, offset } => {
            // a positive offset leaves no feasible point; the multiplier
            // then diverges and the solve reports it
            let d = sub(x, target);
            let radius = (-offset).max(0.0);
            (0.5 * (dot(&d, &d) - radius * radius) + offset.max(0.0), d)
        }
        ConvexOracle::DistBall { center, radius } => {
            let d = sub(x, center);
            (0.5 * (dot(&d, &d) - radius * radius), d)
        }
    }
}

/// `F(x) + (max(0, μ + ρG(x))² − μ²)/(2ρ)` and its gradient.
struct Lagrangian<'a> {
    objective: &'a ConvexOracle,
    constraint: Option<&'a ConvexOracle>,
    mu: f64,
    rho: f64,
}

impl Lagrangian<'_> {
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (mut v, mut grad) = objective_surrogate(self.objective, x);
        if let Some(g) = self.constraint {
            let (gv, gg) = constraint_surrogate(g, x);
            let shifted = (self.mu + self.rho * gv).max(0.0);
            v += (shifted * shifted - self.mu * self.mu) / (2.0 * self.rho);
            axpy(&mut grad, shifted, &gg);
        }
        (v, grad)
    }

    /// Hessian of the current quadratic piece.
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = x.len();
        let mut hess = DMatrix::zeros(m, m);
        match self.objective {
            ConvexOracle::Linear { .. } => {}
            ConvexOracle::DistPoint { .. } => hess.fill_diagonal(1.0),
            ConvexOracle::DistBall { center, radius } => {
                let d = DVector::from_vec(sub(x, center));
                let n = d.norm();
                if n > *radius {
                    let u = &d / n;
                    let shrink = (n - radius) / n;
                    hess.fill_diagonal(shrink);
                    hess += (1.0 - shrink) * &u * u.transpose();
                }
            }
        }
        if let Some(g) = self.constraint {
            let (gv, gg) = constraint_surrogate(g, x);
            let shifted = self.mu + self.rho * gv;
            if shifted > 0.0 {
                let gg = DVector::from_vec(gg);
                hess += self.rho * &gg * gg.transpose();
                if !g.is_linear() {
                    for i in 0..m {
                        hess[(i, i)] += shifted;
                    }
                }
            }
        }
        hess
    }
}

fn combine(vertices: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; vertices[0].len()];
    for (v, wi) in vertices.iter().zip(w) {
        if *wi != 0.0 {
            axpy(&mut x, *wi, v);
        }
    }
    x
}

/// Euclidean projection onto the probability simplex (sort and threshold).
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (i, ui) in u.iter().enumerate() {
        acc += ui;
        let t = (acc - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn value_grad(vertices: &[Vec<f64>], lag: &Lagrangian, w: &[f64]) -> (f64, Vec<f64>) {
    let (v, gx) = lag.eval(&combine(vertices, w));
    (v, vertices.iter().map(|p| dot(p, &gx)).collect())
}

/// `wᵀ∇ − min_i ∇_i`: the largest first-order decrease towards a vertex.
fn simplex_gap(w: &[f64], grad: &[f64]) -> f64 {
    dot(w, grad) - grad.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Alternates accelerated projected gradient (which finds the support) with
/// Newton steps on the face spanned by the support (which converge fast once
/// it is found), until the simplex gap is below `tol`. Returns the weights
/// and the final gap.
fn minimize_on_hull(vertices: &[Vec<f64>], w0: Vec<f64>, lag: &Lagrangian, tol: f64) -> (Vec<f64>, f64) {
    let mut w = project_simplex(&w0);
    let mut spent = 0;
    while spent < MAX_INNER {
        let (w_acc, used) = accelerated(vertices, w, lag, tol, ROUND_ITERS);
        spent += used + 1;
        w = polish(vertices, w_acc, lag);
        let gap = simplex_gap(&w, &value_grad(vertices, lag, &w).1);
        if gap <= tol {
            return (w, gap);
        }
    }
    let gap = simplex_gap(&w, &value_grad(vertices, lag, &w).1);
    (w, gap)
}

/// Newton steps restricted to the face of the current support, truncated
/// to stay on the simplex and accepted only when they decrease the value.
fn polish(vertices: &[Vec<f64>], mut w: Vec<f64>, lag: &Lagrangian) -> Vec<f64> {
    let (mut value, _) = value_grad(vertices, lag, &w);
    for _ in 0..MAX_NEWTON {
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        let k = support.len();
        if k < 2 {
            break;
        }
        let x = combine(vertices, &w);
        let (_, gx) = lag.eval(&x);
        let hx = lag.hessian(&x);
        let m = x.len();
        let basis = DMatrix::from_fn(m, k, |r, c| vertices[support[c]][r]);
        let reduced = basis.transpose() * &hx * &basis;
        let grad = basis.transpose() * DVector::from_vec(gx);
        // KKT system of the quadratic model on {Σ w = 1}
        let mut kkt = DMatrix::zeros(k + 1, k + 1);
        kkt.view_mut((0, 0), (k, k)).copy_from(&reduced);
        for i in 0..k {
            kkt[(i, k)] = 1.0;
            kkt[(k, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(k + 1);
        rhs.rows_mut(0, k).copy_from(&(-grad));
        let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-12) else {
            break;
        };
        let dir: Vec<f64> = (0..k).map(|i| sol[i]).collect();
        if norm(&dir) < 1e-15 {
            break;
        }
        let mut reach = 1.0;
        let mut blocking = None;
        for (j, &i) in support.iter().enumerate() {
            if dir[j] < 0.0 && -w[i] / dir[j] < reach {
                reach = -w[i] / dir[j];
                blocking = Some(i);
            }
        }
        let mut accepted = false;
        let mut step = reach;
        for _ in 0..30 {
            let mut trial = w.clone();
            for (j, &i) in support.iter().enumerate() {
                trial[i] = (trial[i] + step * dir[j]).max(0.0);
            }
            if step == reach {
                if let Some(b) = blocking {
                    trial[b] = 0.0;
                }
            }
            let total: f64 = trial.iter().sum();
            trial.iter_mut().for_each(|t| *t /= total);
            let (v, _) = value_grad(vertices, lag, &trial);
            if v <= value {
                accepted = v < value || step == reach;
                w = trial;
                value = v;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    w
}

/// Accelerated projected gradient on the weights with backtracking and
/// function-value restarts. Returns the weights and the iterations used.
fn accelerated(vertices: &[Vec<f64>], w0: Vec<f64>, lag: &Lagrangian, tol: f64, budget: usize) -> (Vec<f64>, usize) {
    let value_grad = |w: &[f64]| value_grad(vertices, lag, w);
    let mut w = w0;
    let (mut fw, mut gw) = value_grad(&w);
    let mut y = w.clone();
    let mut momentum: f64 = 1.0;
    let mut lip: f64 = 1.0;
    for it in 0..budget {
        if simplex_gap(&w, &gw) <= tol {
            return (w, it);
        }
        let (fy, gy) = value_grad(&y);
        let (next, f_next, g_next) = loop {
            let trial: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - g / lip).collect();
            let cand = project_simplex(&trial);
            let step = sub(&cand, &y);
            let (fc, gc) = value_grad(&cand);
            let model = fy + dot(&gy, &step) + 0.5 * lip * dot(&step, &step);
            if fc <= model + 1e-15 * fy.abs().max(1.0) || lip > 1e15 {
                break (cand, fc, gc);
            }
            lip *= 2.0;
        };
        if f_next > fw {
            // restart the momentum from the last accepted point
            y = w.clone();
            momentum = 1.0;
            continue;
        }
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / m_next;
        y = next.iter().zip(&w).map(|(n, o)| n + beta * (n - o)).collect();
        momentum = m_next;
        w = next;
        fw = f_next;
        gw = g_next;
        lip *= 0.9;
    }
    (w, budget)
}

fn deterministic_tables(states: usize, actions: usize, horizon: usize) -> Result<Vec<Vec<usize>>> {
    let count = (actions as u128).checked_pow((states * horizon) as u32);
    match count {
        Some(n) if n <= MAX_ENUMERATED_POLICIES => {}
        _ => {
            return Err(Error::Budget(format!(
                "{actions}^{} deterministic policies exceed {MAX_ENUMERATED_POLICIES}; use the Frank-Wolfe mode",
                states * horizon
            )))
        }
    }
    let n = count.unwrap_or(0) as usize;
    Ok((0..n)
        .map(|mut code| {
            (0..states * horizon)
                .map(|_| {
                    let a = code % actions;
                    code /= actions;
                    a
                })
                .collect()
        })
        .collect())
}

/// Distinct vertex embeddings with one representative policy each.
struct VertexSet {
    embeddings: Vec<Vec<f64>>,
    policies: Vec<Vec<usize>>,
    index: HashMap<Vec<u64>, usize>,
}

impl VertexSet {
    fn new() -> Self {
        Self {
            embeddings: Vec::new(),
            policies: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Returns whether the embedding was new.
    fn insert(&mut self, psi: Vec<f64>, policy: Vec<usize>) -> bool {
        let key: Vec<u64> = psi.iter().map(|v| (v + 0.0).to_bits()).collect();
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.embeddings.len());
        self.embeddings.push(psi);
        self.policies.push(policy);
        true
    }
}

/// Solves `min f(Ψ^π) s.t. g(Ψ^π) ≤ 0` over all Markov policies of `model`.
pub fn ground_truth_solve(
    model: &FiniteModel,
    features: &TabularFeatures,
    objective: &ConvexOracle,
    constraint: Option<&ConvexOracle>,
    options: &TruthOptions,
) -> Result<GroundTruth> {
    use crate::embedding::FeatureMap;

    let (ns, na, nh) = (model.states(), model.actions(), model.horizon());
    let dim = nh * features.dim();
    crate::error::check_dim("objective dimension", dim, objective.dim())?;
    if let Some(g) = constraint {
        crate::error::check_dim("constraint dimension", dim, g.dim())?;
    }
    let tol = options.tol;
    let inner_tol = 1e-3 * tol;

    let vertex_of = |choice: &[usize]| -> Result<Vec<f64>> {
        let pol = StagePolicy::deterministic(nh, ns, na, choice)?;
        Ok(embedding_of_policy(&pol, model, features)?.into_vec())
    };
    let mut pool = VertexSet::new();
    if options.mode == TruthMode::Enumerate {
        for choice in deterministic_tables(ns, na, nh)? {
            let psi = vertex_of(&choice)?;
            pool.insert(psi, choice);
        }
    }
    let lmo = |grad: &[f64]| -> Result<(Vec<f64>, Vec<usize>)> {
        match options.mode {
            TruthMode::Enumerate => {
                let best = (0..pool.embeddings.len())
                    .min_by(|&a, &b| dot(grad, &pool.embeddings[a]).total_cmp(&dot(grad, &pool.embeddings[b])))
                    .expect("a model has at least one deterministic policy");
                Ok((pool.embeddings[best].clone(), pool.policies[best].clone()))
            }
            TruthMode::FrankWolfe => {
                let plan = plan_known_model(model, grad, features)?;
                let choice = plan
                    .policy
                    .as_deterministic()
                    .expect("greedy policies are deterministic");
                Ok((plan.embedding.into_vec(), choice))
            }
        }
    };

    let mut set = VertexSet::new();
    let uniform = embedding_of_policy(&StagePolicy::uniform(nh, ns, na), model, features)?;
    let (_, grad) = objective_surrogate(objective, uniform.as_slice());
    let (psi, choice) = lmo(&grad)?;
    set.insert(psi, choice);

    let mut w = vec![1.0 / set.embeddings.len() as f64; set.embeddings.len()];
    let mut mu = 0.0;
    let mut rho = 1.0;
    let mut last_violation = f64::INFINITY;
    let mut outer = 0;
    let mut stalled = 0;
    let gap = loop {
        let lag = Lagrangian {
            objective,
            constraint,
            mu,
            rho,
        };
        // the gradient grows with the multiplier, so the inner tolerance does too
        let inner_tol = inner_tol * (1.0 + mu);
        // inner solve; grows the active set until the oracle finds no
        // descent vertex
        loop {
            let (w_new, _) = minimize_on_hull(&set.embeddings, w.clone(), &lag, inner_tol);
            w = w_new;
            let x = combine(&set.embeddings, &w);
            let (_, grad) = lag.eval(&x);
            let (psi, choice) = lmo(&grad)?;
            let fw_gap = dot(&grad, &x) - dot(&grad, &psi);
            if fw_gap <= inner_tol || set.embeddings.len() >= MAX_ACTIVE {
                break;
            }
            if set.insert(psi, choice) {
                w.push(0.0);
            } else {
                break;
            }
        }
        let x = combine(&set.embeddings, &w);
        let grad = match constraint {
            None => objective_surrogate(objective, &x).1,
            Some(g) => {
                let (gv, _) = constraint_surrogate(g, &x);
                let mu_next = (mu + rho * gv).max(0.0);
                let lag = Lagrangian {
                    objective,
                    constraint,
                    mu,
                    rho,
                };
                let grad = lag.eval(&x).1;
                let violation = gv.max(0.0);
                let converged = violation <= 0.1 * tol
                    && (mu_next * gv).abs() <= tol
                    && (mu_next - mu).abs() <= tol * (1.0 + mu_next);
                mu = mu_next;
                if converged {
                    grad
                } else {
                    if violation > 0.25 * last_violation {
                        rho = (rho * 10.0).min(MAX_PENALTY);
                    }
                    // at the largest penalty a violation that no longer
                    // shrinks means the feasible set is empty
                    stalled = if rho == MAX_PENALTY && violation > 0.99 * last_violation {
                        stalled + 1
                    } else {
                        0
                    };
                    if stalled >= STALL_LIMIT {
                        return Err(Error::Numerical(format!(
                            "constraint violation stalled at {violation:e} (multiplier {mu:e}); \
                             the constraint appears infeasible"
                        )));
                    }
                    last_violation = violation;
                    outer += 1;
                    if outer >= MAX_OUTER {
                        return Err(Error::Numerical(format!(
                            "constrained optimum not certified after {MAX_OUTER} multiplier updates \
                             (violation {violation:e}, multiplier {mu}); the constraint may be infeasible"
                        )));
                    }
                    continue;
                }
            }
        };
        break (dot(&grad, &x) - dot(&grad, &lmo(&grad)?.0)).max(0.0);
    };

    let x = combine(&set.embeddings, &w);
    if gap > tol {
        return Err(Error::Numerical(format!(
            "optimality gap {gap:e} exceeds the tolerance {tol:e}"
        )));
    }
    let mut weights = Vec::new();
    let mut policies = Vec::new();
    for (wi, p) in w.iter().zip(&set.policies) {
        if *wi > 0.0 {
            weights.push(*wi);
            policies.push(p.clone());
        }
    }
    let embedding = KernelEmbedding::new(nh, features.dim(), x)?;
    Ok(GroundTruth {
        value: objective.value(embedding.as_slice()),
        constraint_value: constraint.map(|g| g.value(embedding.as_slice())),
        multiplier: mu,
        weights,
        policies,
        gap,
        mode: options.mode,
        embedding,
    })
}
