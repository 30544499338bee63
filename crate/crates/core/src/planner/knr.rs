use super::{PlanResult, PlannedModel};
use crate::embedding::{monte_carlo_embedding, FeatureMap, RolloutPolicy};
use crate::error::{check_dim, Error, Result};
use crate::knr::{exploration_bonus, spectral_norm, KnrDynamics, KnrEstimate};

/// Default nodes per axis for one- and two-dimensional states.
pub const DEFAULT_NODES: usize = 41;
/// Default nodes per axis for three-dimensional states.
pub const DEFAULT_NODES_3D: usize = 15;

const MAX_STATE_DIM: usize = 3;
const WEIGHT_FLOOR: f64 = 1e-12;
const OUTSIDE_MASS_WARNING: f64 = 1e-3;

/// Uniform rectangular grid with the same node count on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    nodes: usize,
}

impl StateGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nodes: usize) -> Result<Self> {
        check_dim("grid bounds", lo.len(), hi.len())?;
        if lo.is_empty() || lo.len() > MAX_STATE_DIM {
            return Err(Error::Config(format!(
                "grid planning supports 1 to {MAX_STATE_DIM} state dimensions, got {}",
                lo.len()
            )));
        }
        if nodes == 0 || lo.iter().zip(&hi).any(|(l, h)| !(h >= l)) {
            return Err(Error::Config("grid needs nodes ≥ 1 and lo ≤ hi on every axis".into()));
        }
        Ok(Self { lo, hi, nodes })
    }

    /// Symmetric box of half-width `max(‖s̄‖_∞, ‖W‖₂) + 4σ√H` on every axis.
    pub fn auto(initial: &[f64], w_norm: f64, sigma: f64, horizon: usize, nodes: usize) -> Result<Self> {
        let reach = initial.iter().fold(w_norm, |m, x| m.max(x.abs()));
        let half = reach + 4.0 * sigma * (horizon as f64).sqrt();
        let half = if half > 0.0 { half } else { 1.0 };
        Self::new(vec![-half; initial.len()], vec![half; initial.len()], nodes)
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dims() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        if self.nodes == 1 {
            0.5 * (self.lo[axis] + self.hi[axis])
        } else {
            self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (self.nodes - 1) as f64
        }
    }

    /// Coordinates of node `k`; axis 0 varies fastest.
    pub fn node(&self, k: usize) -> Vec<f64> {
        let mut rem = k;
        (0..self.dims())
            .map(|j| {
                let i = rem % self.nodes;
                rem /= self.nodes;
                self.coord(j, i)
            })
            .collect()
    }

    fn nearest_axis(&self, axis: usize, x: f64) -> usize {
        if self.nodes == 1 || self.hi[axis] == self.lo[axis] {
            return 0;
        }
        let u = (x - self.lo[axis]) / (self.hi[axis] - self.lo[axis]) * (self.nodes - 1) as f64;
        u.round().clamp(0.0, (self.nodes - 1) as f64) as usize
    }

    pub fn nearest(&self, x: &[f64]) -> usize {
        x.iter()
            .enumerate()
            .rev()
            .fold(0, |acc, (j, v)| acc * self.nodes + self.nearest_axis(j, *v))
    }

    /// Mass of `N(mean, σ²)` on each node's nearest-node interval along one
    /// axis (outer intervals extend to infinity), and the mass outside
    /// `[lo, hi]`.
    fn axis_masses(&self, axis: usize, mean: f64, sigma: f64) -> (Vec<(usize, f64)>, f64) {
        if sigma == 0.0 || self.nodes == 1 {
            let outside = if mean < self.lo[axis] || mean > self.hi[axis] {
                1.0
            } else {
                0.0
            };
            return (
                vec![(self.nearest_axis(axis, mean), 1.0)],
                if sigma == 0.0 { outside } else { 0.0 },
            );
        }
        let cdf = |x: f64| normal_cdf((x - mean) / sigma);
        let mut out = Vec::new();
        let mut prev = 0.0;
        for i in 0..self.nodes {
            let upper = if i + 1 == self.nodes {
                1.0
            } else {
                cdf(0.5 * (self.coord(axis, i) + self.coord(axis, i + 1)))
            };
            let w = upper - prev;
            prev = upper;
            if w > WEIGHT_FLOOR {
                out.push((i, w));
            }
        }
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        for (_, w) in out.iter_mut() {
            *w /= total;
        }
        let outside = cdf(self.lo[axis]) + (1.0 - cdf(self.hi[axis]));
        (out, outside)
    }

    /// Sparse next-node distribution for a Gaussian with mean `mean`.
    fn project_gaussian(&self, mean: &[f64], sigma: f64) -> (Vec<(usize, f64)>, f64) {
        let mut dist = vec![(0usize, 1.0)];
        let mut stride = 1;
        let mut outside = 0.0;
        for (j, m) in mean.iter().enumerate() {
            let (axis, out) = self.axis_masses(j, *m, sigma);
            outside += out;
            dist = dist
                .iter()
                .flat_map(|&(k, w)| axis.iter().map(move |&(i, v)| (k + i * stride, w * v)))
                .collect();
            stride *= self.nodes;
        }
        (dist, outside.min(1.0))
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Greedy grid policy: the initial state has its own entry, later states use
/// the nearest node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPolicy {
    grid: StateGrid,
    actions: usize,
    /// `[h][k]` with `k = grid.len()` the initial state
    choice: Vec<usize>,
}

impl GridPolicy {
    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn action(&self, h: usize, s: &[f64]) -> usize {
        let k = if h == 0 { self.grid.len() } else { self.grid.nearest(s) };
        self.choice[h * (self.grid.len() + 1) + k]
    }
}

impl RolloutPolicy<[f64]> for GridPolicy {
    fn num_actions(&self) -> usize {
        self.actions
    }

    fn act(&self, h: usize, s: &[f64], _u: f64) -> usize {
        self.action(h, s)
    }
}

/// Knobs of the grid planner.
#[derive(Debug, Clone, PartialEq)]
pub struct KnrPlanOptions {
    /// Nodes per axis; `None` picks the default for the state dimension.
    pub nodes: Option<usize>,
    /// Total-variation constant `κ` of the bonus.
    pub kappa: f64,
    /// Bound on one stage cost `|θ_h·ψ_h|`; the bonus at stage `h` scales
    /// with `per_step_bound·(H − h)`.
    pub per_step_bound: f64,
    /// Rollouts for the planned embedding.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for KnrPlanOptions {
    fn default() -> Self {
        Self {
            nodes: None,
            kappa: 1.0,
            per_step_bound: 1.0,
            mc_samples: 1000,
            seed: 0,
        }
    }
}

/// Optimistic plan under the ridge estimate: value iteration on a state
/// grid with Gaussian next-state laws under `Ŵ`, projected to nodes, and
/// costs lowered by the exploration bonus. `dynamics` supplies the
/// features, noise, horizon and initial state; its matrix is replaced by
/// `Ŵ`.
pub fn optimistic_plan_knr<F: FeatureMap<[f64]>>(
    dynamics: &KnrDynamics,
    estimate: &KnrEstimate,
    theta: &[f64],
    features: &F,
    options: &KnrPlanOptions,
) -> Result<PlanResult<GridPolicy>> {
    let model = dynamics.with_matrix(estimate.w_hat().clone())?;
    let nh = model.horizon();
    let d = features.dim();
    check_dim("cost direction", nh * d, theta.len())?;
    check_dim("cost feature horizon", nh, features.horizon())?;
    let nodes = options.nodes.unwrap_or(if model.state_dim() >= 3 {
        DEFAULT_NODES_3D
    } else {
        DEFAULT_NODES
    });
    let grid = StateGrid::auto(model.initial(), spectral_norm(model.w()), model.sigma(), nh, nodes)?;
    let na = model.actions();
    let n = grid.len();
    let points: Vec<Vec<f64>> = (0..n)
        .map(|k| grid.node(k))
        .chain(std::iter::once(model.initial().to_vec()))
        .collect();

    let mut worst_outside: f64 = 0.0;
    let mut next: Vec<Vec<(usize, f64)>> = Vec::with_capacity((n + 1) * na);
    let mut phi = vec![0.0; model.features().dim()];
    let mut bonus_base = Vec::with_capacity((n + 1) * na);
    for x in &points {
        for a in 0..na {
            model.features().eval_into(x, a, &mut phi);
            let (dist, outside) = grid.project_gaussian(&model.mean_next(x, a), model.sigma());
            worst_outside = worst_outside.max(outside);
            next.push(dist);
            bonus_base.push(exploration_bonus(estimate, &phi, model.sigma(), options.kappa, 1.0));
        }
    }

    let mut psi = vec![0.0; d];
    let mut v_next = vec![0.0; n + 1];
    let mut choice = vec![0usize; nh * (n + 1)];
    for h in (0..nh).rev() {
        let remaining = options.per_step_bound * (nh - h) as f64;
        let mut v = vec![0.0; n + 1];
        let range = if h == 0 { n..n + 1 } else { 0..n };
        for k in range {
            let mut q = Vec::with_capacity(na);
            for a in 0..na {
                features.eval_into(h, &points[k], a, &mut psi);
                let cost = crate::linalg::dot(&theta[h * d..(h + 1) * d], &psi) - bonus_base[k * na + a] * remaining;
                let cont: f64 = next[k * na + a].iter().map(|&(j, w)| w * v_next[j]).sum();
                q.push(cost + cont);
            }
            let a = crate::linalg::argmin(&q);
            choice[h * (n + 1) + k] = a;
            v[k] = q[a];
        }
        v_next = v;
    }

    let policy = GridPolicy {
        grid,
        actions: na,
        choice,
    };
    let embedding = monte_carlo_embedding(&model, &policy, features, options.mc_samples, options.seed)?;
    let mut warnings = Vec::new();
    if worst_outside > OUTSIDE_MASS_WARNING {
        warnings.push(format!(
            "state grid misses up to {worst_outside:.3e} of the next-state mass; widen the grid"
        ));
    }
    Ok(PlanResult {
        value: v_next[n],
        policy,
        model: PlannedModel::KnrEstimate,
        embedding,
        warnings,
    })
}
