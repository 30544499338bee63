//! Dual ascent on `(α, β, γ)` and online projected subgradient methods.

mod online;
mod projection;

pub use online::{online_projected_subgradient, BallDomain, Comparator, ConcaveReward, LinearReward, OnlineResult};
pub use projection::{project_ball, project_cone, project_cone_slab, DYKSTRA_MAX_SWEEPS, DYKSTRA_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fenchel::{ConvexOracle, PerspectiveTerm};
use crate::linalg::{add, dot, norm, scale};

const FEASIBILITY_TOL: f64 = 1e-9;

/// Dual iterate: `α` for the objective, `(β, γ)` for the constraint, and the
/// cost direction `θ = α + β`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualState {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: f64,
    gamma_cap: f64,
    theta: Vec<f64>,
}

impl DualState {
    /// `α = 0` (or `c` for a linear objective), `β = γc` or `0`, `γ = Γ/2`.
    /// Without a constraint `β` and `γ` stay at zero.
    pub fn initial(objective: &ConvexOracle, constraint: Option<&ConvexOracle>, gamma_cap: f64) -> Result<Self> {
        let dim = objective.dim();
        let alpha = match objective {
            ConvexOracle::Linear { c, .. } => c.clone(),
            _ => vec![0.0; dim],
        };
        let (beta, gamma) = match constraint {
            None => (vec![0.0; dim], 0.0),
            Some(g) => {
                check_dim("constraint dimension", dim, g.dim())?;
                if !(gamma_cap > 0.0) {
                    return Err(Error::Config(format!(
                        "multiplier cap must be positive, got {gamma_cap}"
                    )));
                }
                let gamma = 0.5 * gamma_cap;
                match g {
                    ConvexOracle::Linear { c, .. } => (scale(c, gamma), gamma),
                    _ => (vec![0.0; dim], gamma),
                }
            }
        };
        Ok(Self::assemble(alpha, beta, gamma, gamma_cap))
    }

    fn assemble(alpha: Vec<f64>, beta: Vec<f64>, gamma: f64, gamma_cap: f64) -> Self {
        let theta = add(&alpha, &beta);
        Self {
            alpha,
            beta,
            gamma,
            gamma_cap,
            theta,
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_cap(&self) -> f64 {
        self.gamma_cap
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Whether `α` and `(β, γ)` lie in their domains.
    pub fn is_feasible(&self, objective: &ConvexOracle, constraint: Option<&ConvexOracle>) -> bool {
        let alpha_ok = objective.in_dual_domain(&self.alpha);
        let pair_ok = match constraint {
            None => self.gamma == 0.0 && self.beta.iter().all(|b| *b == 0.0),
            Some(g) => {
                let cone_ok = match g {
                    ConvexOracle::Linear { c, .. } => {
                        crate::linalg::dist(&self.beta, &scale(c, self.gamma))
                            <= FEASIBILITY_TOL * (1.0 + self.gamma * norm(c))
                    }
                    _ => norm(&self.beta) <= self.gamma * g.lipschitz() + FEASIBILITY_TOL,
                };
                cone_ok && self.gamma >= -FEASIBILITY_TOL && self.gamma <= self.gamma_cap + FEASIBILITY_TOL
            }
        };
        alpha_ok && pair_ok
    }
}

/// Step sizes `η_t = 2Γ/(H√t)` or, for a known number of rounds, `2Γ/(H√T)`.
///
/// Without a constraint `Γ` only sets the step scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    Anytime,
    FixedHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    mode: StepMode,
    gamma_cap: f64,
    horizon: usize,
    rounds: usize,
}

impl StepSchedule {
    pub fn new(mode: StepMode, gamma_cap: f64, horizon: usize, rounds: usize) -> Result<Self> {
        if !(gamma_cap > 0.0) || horizon == 0 || rounds == 0 {
            return Err(Error::Config(format!(
                "step schedule needs Γ > 0, H ≥ 1 and T ≥ 1 (got {gamma_cap}, {horizon}, {rounds})"
            )));
        }
        Ok(Self {
            mode,
            gamma_cap,
            horizon,
            rounds,
        })
    }

    /// Step for round `t ≥ 1`.
    pub fn eta(&self, t: usize) -> f64 {
        let n = match self.mode {
            StepMode::Anytime => t.max(1),
            StepMode::FixedHorizon => self.rounds,
        };
        2.0 * self.gamma_cap / (self.horizon as f64 * (n as f64).sqrt())
    }
}

/// One projected ascent step of the saddle function
/// `(α + β)ᵀΨ − f*(α) − γ·g*(β/γ)` at the embedding `psi`.
///
/// A linear objective keeps `α = c`. A linear constraint `c·x + b` keeps
/// `β = γc`, and the projection onto that segment moves `γ` by
/// `η(c·Ψ + b)/(‖c‖² + 1)`.
pub fn dual_step(
    state: &DualState,
    psi: &[f64],
    objective: &ConvexOracle,
    constraint: Option<&ConvexOracle>,
    eta: f64,
) -> Result<DualState> {
    check_dim("embedding", state.alpha.len(), psi.len())?;
    if !(eta >= 0.0) {
        return Err(Error::Argument(format!("step size must be nonnegative, got {eta}")));
    }
    let alpha = if objective.is_linear() {
        state.alpha.clone()
    } else {
        let grad = objective.conjugate_subgradient(&state.alpha)?;
        let moved: Vec<f64> = state
            .alpha
            .iter()
            .zip(psi.iter().zip(&grad))
            .map(|(a, (p, g))| a + eta * (p - g))
            .collect();
        project_ball(&moved, objective.lipschitz())
    };
    let (beta, gamma) = match constraint {
        None => (state.beta.clone(), state.gamma),
        Some(ConvexOracle::Linear { c, offset }) => {
            let rate = (dot(c, psi) + offset) / (dot(c, c) + 1.0);
            let gamma = (state.gamma + eta * rate).clamp(0.0, state.gamma_cap);
            (scale(c, gamma), gamma)
        }
        Some(g) => {
            let term = PerspectiveTerm::new(g.clone());
            let (d_beta, d_gamma) = term.subgradients(&state.beta, state.gamma)?;
            let moved: Vec<f64> = state
                .beta
                .iter()
                .zip(psi.iter().zip(&d_beta))
                .map(|(b, (p, d))| b + eta * (p - d))
                .collect();
            project_cone_slab(&moved, state.gamma - eta * d_gamma, state.gamma_cap, g.lipschitz())?
        }
    };
    Ok(DualState::assemble(alpha, beta, gamma, state.gamma_cap))
}
