use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::FeatureMap;
use crate::error::{Error, Result};

/// Declarative description of a dynamics feature map `φ(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeatureSpec {
    /// `(tanh(s); e_a)/√(state_dim + 1)`
    Identity,
    /// One-hot over (grid cell, action) for a uniform grid of `bins` cells
    /// per axis on `[-extent, extent]`.
    TabularOnehot { bins: usize, extent: f64 },
    /// `cos(M_a s + b_a)/√dim` with Gaussian `M_a` and uniform phases.
    RandomProjection { dim: usize, seed: u64 },
}

/// A dynamics feature map with `‖φ(s, a)‖₂ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsFeatures {
    state_dim: usize,
    actions: usize,
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Identity,
    Tabular {
        bins: usize,
        extent: f64,
    },
    Random {
        dim: usize,
        // per action: dim × state_dim row-major, then dim phases
        weights: Vec<Vec<f64>>,
        phases: Vec<Vec<f64>>,
    },
}

impl DynamicsFeatures {
    pub fn new(spec: &FeatureSpec, state_dim: usize, actions: usize) -> Result<Self> {
        if state_dim == 0 || actions == 0 {
            return Err(Error::Config(
                "state dimension and action count must be positive".into(),
            ));
        }
        let kind = match *spec {
            FeatureSpec::Identity => Kind::Identity,
            FeatureSpec::TabularOnehot { bins, extent } => {
                if bins == 0 || !(extent > 0.0) {
                    return Err(Error::Config("tabular features need bins ≥ 1 and extent > 0".into()));
                }
                let cells = (bins as u64).checked_pow(state_dim as u32);
                if cells.is_none_or(|c| c * actions as u64 > 100_000) {
                    return Err(Error::Config("tabular feature dimension too large".into()));
                }
                Kind::Tabular { bins, extent }
            }
            FeatureSpec::RandomProjection { dim, seed } => {
                if dim == 0 {
                    return Err(Error::Config("random projection dimension must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut weights = Vec::with_capacity(actions);
                let mut phases = Vec::with_capacity(actions);
                for _ in 0..actions {
                    weights.push((0..dim * state_dim).map(|_| rng.sample(StandardNormal)).collect());
                    phases.push((0..dim).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect());
                }
                Kind::Random { dim, weights, phases }
            }
        };
        Ok(Self {
            state_dim,
            actions,
            kind,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Identity => self.state_dim + self.actions,
            Kind::Tabular { bins, .. } => bins.pow(self.state_dim as u32) * self.actions,
            Kind::Random { dim, .. } => *dim,
        }
    }

    pub fn eval_into(&self, s: &[f64], a: usize, out: &mut [f64]) {
        debug_assert_eq!(s.len(), self.state_dim);
        match &self.kind {
            Kind::Identity => {
                let k = 1.0 / ((self.state_dim + 1) as f64).sqrt();
                out.fill(0.0);
                for (o, x) in out.iter_mut().zip(s) {
                    *o = k * x.tanh();
                }
                out[self.state_dim + a] = k;
            }
            Kind::Tabular { bins, extent } => {
                out.fill(0.0);
                let mut cell = 0;
                for x in s.iter().rev() {
                    let u = ((x + extent) / (2.0 * extent) * *bins as f64).floor();
                    let i = u.clamp(0.0, (*bins - 1) as f64) as usize;
                    cell = cell * bins + i;
                }
                out[cell * self.actions + a] = 1.0;
            }
            Kind::Random { dim, weights, phases } => {
                let k = 1.0 / (*dim as f64).sqrt();
                let w = &weights[a];
                for (j, o) in out.iter_mut().enumerate() {
                    let row = &w[j * self.state_dim..(j + 1) * self.state_dim];
                    *o = k * (crate::linalg::dot(row, s) + phases[a][j]).cos();
                }
            }
        }
    }

    pub fn eval(&self, s: &[f64], a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(s, a, &mut out);
        out
    }
}

/// Uses the dynamics features as cost features at every stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryFeatures {
    pub features: DynamicsFeatures,
    pub horizon: usize,
}

impl FeatureMap<[f64]> for StationaryFeatures {
    fn dim(&self) -> usize {
        self.features.dim()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn bound(&self) -> f64 {
        1.0
    }

    fn eval_into(&self, _h: usize, s: &[f64], a: usize, out: &mut [f64]) {
        self.features.eval_into(s, a, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn every_kind_is_unit_bounded() {
        let specs = [
            FeatureSpec::Identity,
            FeatureSpec::TabularOnehot { bins: 4, extent: 2.0 },
            FeatureSpec::RandomProjection { dim: 6, seed: 3 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for spec in &specs {
            let f = DynamicsFeatures::new(spec, 2, 3).unwrap();
            for _ in 0..500 {
                let s: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
                let a = rng.random_range(0..3);
                assert!(norm(&f.eval(&s, a)) <= 1.0 + 1e-12, "{spec:?}");
            }
        }
    }

    #[test]
    fn tabular_cells_clip_to_the_grid() {
        let f = DynamicsFeatures::new(&FeatureSpec::TabularOnehot { bins: 2, extent: 1.0 }, 1, 2).unwrap();
        assert_eq!(f.eval(&[-9.0], 1), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(f.eval(&[0.5], 0), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(f.eval(&[9.0], 1), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn spec_tags_parse() {
        let s: FeatureSpec = serde_json::from_str(r#"{"kind":"random-projection","dim":4,"seed":1}"#).unwrap();
        assert_eq!(s, FeatureSpec::RandomProjection { dim: 4, seed: 1 });
    }
}
