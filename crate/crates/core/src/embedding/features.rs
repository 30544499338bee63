use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::norm;

/// Per-stage feature map `ψ_h : S × A → ℝ^d` with `‖ψ_h(s, a)‖₂ ≤ B`.
///
/// `S` is the state representation: `usize` for tabular models, `[f64]` for
/// continuous states.
pub trait FeatureMap<S: ?Sized> {
    fn dim(&self) -> usize;
    fn horizon(&self) -> usize;
    /// The bound `B` on every feature norm.
    fn bound(&self) -> f64;
    fn eval_into(&self, h: usize, s: &S, a: usize, out: &mut [f64]);

    fn eval(&self, h: usize, s: &S, a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(h, s, a, &mut out);
        out
    }
}

/// Feature table for finite state and action sets, laid out `[h][s][a][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularFeatures {
    horizon: usize,
    states: usize,
    actions: usize,
    dim: usize,
    table: Vec<f64>,
    bound: f64,
}

impl TabularFeatures {
    /// Wraps an explicit table. The bound is the largest feature norm.
    pub fn from_table(horizon: usize, states: usize, actions: usize, dim: usize, table: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        check_dim("feature table", horizon * states * actions * dim, table.len())?;
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("feature table has non-finite entries".into()));
        }
        let bound = table.chunks(dim).map(norm).fold(0.0, f64::max);
        Ok(Self {
            horizon,
            states,
            actions,
            dim,
            table,
            bound,
        })
    }

    /// Canonical embedding: `ψ_h(s, a) = e_{s·A + a}`, so `Ψ` is the flattened
    /// occupancy table.
    pub fn one_hot(horizon: usize, states: usize, actions: usize) -> Self {
        let dim = states * actions;
        let mut table = vec![0.0; horizon * dim * dim];
        for h in 0..horizon {
            for k in 0..dim {
                table[(h * dim + k) * dim + k] = 1.0;
            }
        }
        Self {
            horizon,
            states,
            actions,
            dim,
            table,
            bound: 1.0,
        }
    }

    /// `ψ_h ≡ v` for every stage, state and action.
    pub fn constant(horizon: usize, states: usize, actions: usize, v: &[f64]) -> Result<Self> {
        let table = v
            .iter()
            .copied()
            .cycle()
            .take(horizon * states * actions * v.len())
            .collect();
        Self::from_table(horizon, states, actions, v.len(), table)
    }

    /// Random features with entries uniform in `[-1, 1]`, rescaled so that
    /// each norm is at most `bound`.
    pub fn random<R: Rng + ?Sized>(
        horizon: usize,
        states: usize,
        actions: usize,
        dim: usize,
        bound: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(horizon * states * actions * dim);
        for _ in 0..horizon * states * actions {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let n = norm(&v);
            let s = if n > 0.0 { bound * rng.random::<f64>() / n } else { 0.0 };
            table.extend(v.iter().map(|x| x * s));
        }
        Self::from_table(horizon, states, actions, dim, table)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = ((h * self.states + s) * self.actions + a) * self.dim;
        &self.table[start..start + self.dim]
    }

    /// Applies a per-stage linear map: `ψ'_h(s, a) = M_h ψ_h(s, a)` where
    /// `maps[h]` is row-major `out_dim × dim`.
    pub fn mapped(&self, maps: &[Vec<f64>], out_dim: usize) -> Result<Self> {
        check_dim("stage maps", self.horizon, maps.len())?;
        let mut table = Vec::with_capacity(self.horizon * self.states * self.actions * out_dim);
        for (h, m) in maps.iter().enumerate() {
            check_dim("stage map size", out_dim * self.dim, m.len())?;
            for s in 0..self.states {
                for a in 0..self.actions {
                    let psi = self.get(h, s, a);
                    table.extend(m.chunks(self.dim).map(|row| crate::linalg::dot(row, psi)));
                }
            }
        }
        Self::from_table(self.horizon, self.states, self.actions, out_dim, table)
    }
}

impl FeatureMap<usize> for TabularFeatures {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn eval_into(&self, h: usize, s: &usize, a: usize, out: &mut [f64]) {
        out.copy_from_slice(self.get(h, *s, a));
    }
}

/// `ψ'_h(s, a) = M_h ψ_h(s, a)` for per-stage matrices `M_h`
/// (row-major, `out_dim × inner.dim()`).
#[derive(Debug, Clone, PartialEq)]
pub struct StageMapped<F> {
    inner: F,
    maps: Option<Vec<Vec<f64>>>,
    out_dim: usize,
    bound: f64,
}

impl<F> StageMapped<F> {
    /// No mapping: `ψ' = ψ`.
    pub fn identity<S: ?Sized>(inner: F) -> Self
    where
        F: FeatureMap<S>,
    {
        Self {
            out_dim: inner.dim(),
            bound: inner.bound(),
            inner,
            maps: None,
        }
    }

    /// The bound is `B·max_h ‖M_h‖_F`.
    pub fn new<S: ?Sized>(inner: F, maps: Vec<Vec<f64>>, out_dim: usize) -> Result<Self>
    where
        F: FeatureMap<S>,
    {
        check_dim("stage maps", inner.horizon(), maps.len())?;
        for m in &maps {
            check_dim("stage map size", out_dim * inner.dim(), m.len())?;
        }
        let largest = maps.iter().map(|m| norm(m)).fold(0.0, f64::max);
        Ok(Self {
            bound: inner.bound() * largest,
            inner,
            maps: Some(maps),
            out_dim,
        })
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<S: ?Sized, F: FeatureMap<S>> FeatureMap<S> for StageMapped<F> {
    fn dim(&self) -> usize {
        self.out_dim
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn eval_into(&self, h: usize, s: &S, a: usize, out: &mut [f64]) {
        match &self.maps {
            None => self.inner.eval_into(h, s, a, out),
            Some(maps) => {
                let psi = self.inner.eval(h, s, a);
                for (o, row) in out.iter_mut().zip(maps[h].chunks(psi.len())) {
                    *o = crate::linalg::dot(row, &psi);
                }
            }
        }
    }
}
