//! Kernelized nonlinear regulator: `s' = W*φ(s, a) + ε`, `ε ~ N(0, σ²I)`.

mod features;
mod ridge;

pub use features::{DynamicsFeatures, FeatureSpec, StationaryFeatures};
pub use ridge::{knr_radius, knr_radius_log, ridge_fit, KnrEstimate};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::embedding::TransitionSampler;
use crate::error::{check_dim, Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Linear-in-features Gaussian dynamics over a finite action set.
#[derive(Debug, Clone, PartialEq)]
pub struct KnrDynamics {
    w: DMatrix<f64>,
    features: DynamicsFeatures,
    sigma: f64,
    horizon: usize,
    initial: Vec<f64>,
}

impl KnrDynamics {
    pub fn new(
        w: DMatrix<f64>,
        features: DynamicsFeatures,
        sigma: f64,
        horizon: usize,
        initial: Vec<f64>,
    ) -> Result<Self> {
        check_dim("transition matrix rows", features.state_dim(), w.nrows())?;
        check_dim("transition matrix columns", features.dim(), w.ncols())?;
        check_dim("initial state", features.state_dim(), initial.len())?;
        if !(sigma >= 0.0) || horizon == 0 {
            return Err(Error::Config(format!(
                "dynamics need σ ≥ 0 and H ≥ 1, got σ={sigma}, H={horizon}"
            )));
        }
        Ok(Self {
            w,
            features,
            sigma,
            horizon,
            initial,
        })
    }

    /// Dynamics whose matrix satisfies `‖W‖₂ ≤ 1`.
    pub fn truth(
        w: DMatrix<f64>,
        features: DynamicsFeatures,
        sigma: f64,
        horizon: usize,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let n = spectral_norm(&w);
        if n > 1.0 + NORM_TOL {
            return Err(Error::Config(format!("transition matrix norm {n} exceeds 1")));
        }
        Self::new(w, features, sigma, horizon, initial)
    }

    /// A Gaussian random matrix rescaled to spectral norm `scale ≤ 1`.
    pub fn random_truth<R: Rng + ?Sized>(
        features: DynamicsFeatures,
        sigma: f64,
        horizon: usize,
        initial: Vec<f64>,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::Config(format!("matrix scale must lie in (0, 1], got {scale}")));
        }
        let w = DMatrix::from_fn(features.state_dim(), features.dim(), |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let w = &w * (scale / spectral_norm(&w));
        Self::truth(w, features, sigma, horizon, initial)
    }

    /// The same features, noise and horizon with another matrix.
    pub fn with_matrix(&self, w: DMatrix<f64>) -> Result<Self> {
        Self::new(w, self.features.clone(), self.sigma, self.horizon, self.initial.clone())
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn features(&self) -> &DynamicsFeatures {
        &self.features
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.features.state_dim()
    }

    pub fn actions(&self) -> usize {
        self.features.actions()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// `Wφ(s, a)`
    pub fn mean_next(&self, s: &[f64], a: usize) -> Vec<f64> {
        let phi = DVector::from_vec(self.features.eval(s, a));
        (&self.w * phi).as_slice().to_vec()
    }
}

impl TransitionSampler for KnrDynamics {
    type State = Vec<f64>;

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_state(&self) -> Vec<f64> {
        self.initial.clone()
    }

    fn sample_next<R: Rng + ?Sized>(&self, _h: usize, s: &Vec<f64>, a: usize, rng: &mut R) -> Vec<f64> {
        knr_sample_step(self, s, a, rng)
    }
}

/// `s' = Wφ(s, a) + σξ`, `ξ ~ N(0, I)`.
pub fn knr_sample_step<R: Rng + ?Sized>(dyn_: &KnrDynamics, s: &[f64], a: usize, rng: &mut R) -> Vec<f64> {
    let mut next = dyn_.mean_next(s, a);
    if dyn_.sigma > 0.0 {
        for x in next.iter_mut() {
            *x += dyn_.sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    next
}

pub fn spectral_norm(w: &DMatrix<f64>) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    w.clone().singular_values().max()
}

/// `∫ (N₁ − N₂)²/N₁ = exp(‖μ₁ − μ₂‖²/σ²) − 1` for `N(μᵢ, σ²I)`.
pub fn gaussian_chi_square(mu1: &[f64], mu2: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Argument(format!("σ must be positive, got {sigma}")));
    }
    check_dim("Gaussian means", mu1.len(), mu2.len())?;
    let d2 = crate::linalg::dist(mu1, mu2).powi(2);
    Ok((d2 / (sigma * sigma)).exp_m1())
}

/// Optimism bonus `min(κ·2√R·‖φ‖_{Λ⁻¹}/σ, 2)·bound`.
///
/// The first factor bounds the total-variation distance between the
/// next-state laws of any model in the ellipsoid and the estimate; `bound`
/// bounds the value that can still be collected from the next state.
pub fn exploration_bonus(estimate: &KnrEstimate, phi: &[f64], sigma: f64, kappa: f64, bound: f64) -> f64 {
    let width = 2.0 * estimate.radius().sqrt() * estimate.inverse_norm(phi);
    tv_factor(kappa * width, sigma) * bound
}

/// `min(x/σ, 2)`, with `0/0 = 0`.
pub(crate) fn tv_factor(x: f64, sigma: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if sigma == 0.0 {
        2.0
    } else {
        (x / sigma).min(2.0)
    }
}
