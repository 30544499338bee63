use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Ridge estimate `Ŵ = (Σ s'φᵀ) Λ⁻¹` with `Λ = λI + Σ φφᵀ`, plus the
/// confidence radius of the ellipsoid `‖(W − Ŵ)Λ^{1/2}‖₂² ≤ R`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnrEstimate {
    lambda: f64,
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    w_hat: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    samples: usize,
    radius: f64,
}

impl KnrEstimate {
    /// The prior-only estimate: `Ŵ = 0`, `Λ = λI`, `R = 0`.
    pub fn new(state_dim: usize, feature_dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Config(format!("ridge parameter must be positive, got {lambda}")));
        }
        Ok(Self {
            lambda,
            gram: DMatrix::identity(feature_dim, feature_dim) * lambda,
            cross: DMatrix::zeros(state_dim, feature_dim),
            w_hat: DMatrix::zeros(state_dim, feature_dim),
            gram_inv: DMatrix::identity(feature_dim, feature_dim) / lambda,
            samples: 0,
            radius: 0.0,
        })
    }

    /// Accumulates one transition without refitting.
    pub fn push(&mut self, phi: &[f64], next: &[f64]) {
        let phi = DVector::from_column_slice(phi);
        let next = DVector::from_column_slice(next);
        self.gram += &phi * phi.transpose();
        self.cross += next * phi.transpose();
        self.samples += 1;
    }

    /// Recomputes `Ŵ` and `Λ⁻¹` from the accumulated sums.
    pub fn refit(&mut self) -> Result<()> {
        let chol = self
            .gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("ridge Gram matrix is not positive definite".into()))?;
        self.gram_inv = chol.inverse();
        self.w_hat = &self.cross * &self.gram_inv;
        Ok(())
    }

    pub fn set_radius(&mut self, radius: f64) {
        self.radius = radius;
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn w_hat(&self) -> &DMatrix<f64> {
        &self.w_hat
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn cross(&self) -> &DMatrix<f64> {
        &self.cross
    }

    /// `ln det Λ − d_φ ln λ`.
    pub fn log_det_ratio(&self) -> f64 {
        let d = self.gram.nrows() as f64;
        let chol = self
            .gram
            .clone()
            .cholesky()
            .expect("Gram matrix stays positive definite");
        2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>() - d * self.lambda.ln()
    }

    /// `‖φ‖_{Λ⁻¹}`
    pub fn inverse_norm(&self, phi: &[f64]) -> f64 {
        let phi = DVector::from_column_slice(phi);
        (phi.dot(&(&self.gram_inv * &phi))).max(0.0).sqrt()
    }

    /// `Ŵφ`
    pub fn predict(&self, phi: &[f64]) -> Vec<f64> {
        (&self.w_hat * DVector::from_column_slice(phi)).as_slice().to_vec()
    }

    /// `‖(W − Ŵ)Λ^{1/2}‖₂²`, the largest eigenvalue of `(W − Ŵ)Λ(W − Ŵ)ᵀ`.
    pub fn ellipsoid_distance(&self, w: &DMatrix<f64>) -> f64 {
        let diff = w - &self.w_hat;
        let m = &diff * &self.gram * diff.transpose();
        SymmetricEigen::new(m).eigenvalues.max().max(0.0)
    }

    pub fn contains(&self, w: &DMatrix<f64>) -> bool {
        self.ellipsoid_distance(w) <= self.radius
    }
}

/// Closed-form ridge regression over `(φ, s')` pairs.
pub fn ridge_fit(
    transitions: &[(Vec<f64>, Vec<f64>)],
    state_dim: usize,
    feature_dim: usize,
    lambda: f64,
) -> Result<KnrEstimate> {
    let mut est = KnrEstimate::new(state_dim, feature_dim, lambda)?;
    for (phi, next) in transitions {
        crate::error::check_dim("transition features", feature_dim, phi.len())?;
        crate::error::check_dim("next state", state_dim, next.len())?;
        est.push(phi, next);
    }
    est.refit()?;
    Ok(est)
}

/// Confidence radius after `t` episodes, with the failure budget split as
/// `δ_t = 3δ/(π²t²)` and `‖W*‖₂ ≤ 1`:
///
/// `R = 2λ + 8σ²(d ln 5 + 2 ln t + ln 4 + ln(det_ratio · π²t²/(3δ)))`.
pub fn knr_radius(t: usize, d: usize, lambda: f64, sigma: f64, delta: f64, det_ratio: f64) -> Result<f64> {
    if !(det_ratio >= 1.0) {
        return Err(Error::Config(format!("determinant ratio must be ≥ 1, got {det_ratio}")));
    }
    knr_radius_log(t, d, lambda, sigma, delta, det_ratio.ln())
}

/// [`knr_radius`] taking `ln det_ratio`, which avoids overflow for long runs.
pub fn knr_radius_log(t: usize, d: usize, lambda: f64, sigma: f64, delta: f64, log_det_ratio: f64) -> Result<f64> {
    if t == 0 || !(delta > 0.0 && delta < 1.0) || !(lambda > 0.0) || !(sigma >= 0.0) {
        return Err(Error::Config(format!(
            "radius needs t ≥ 1, δ ∈ (0,1), λ > 0, σ ≥ 0 (got t={t}, δ={delta}, λ={lambda}, σ={sigma})"
        )));
    }
    let tf = t as f64;
    let log_term =
        d as f64 * 5f64.ln() + 2.0 * tf.ln() + 4f64.ln() + log_det_ratio + (PI * PI * tf * tf / (3.0 * delta)).ln();
    Ok(2.0 * lambda + 8.0 * sigma * sigma * log_term)
}
