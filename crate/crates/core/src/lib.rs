//! Primal-dual policy optimization for constrained convex Markov decision
//! processes.
//!
//! The decision variable is the kernel embedding `Ψ^π = (E_π[ψ_h(s_h, a_h)])_h`
//! of a policy. Objectives and constraints are convex functions of `Ψ`. The
//! constrained problem
//!
//! ```text
//! min_π f(Ψ^π)   s.t.   g(Ψ^π) ≤ 0
//! ```
//!
//! is rewritten through a Lagrange multiplier `γ` and the Fenchel conjugates
//! of `f` and `g` into a saddle problem that is linear in `Ψ`:
//!
//! ```text
//! min_Ψ max_{α, β, γ}  (α + β)ᵀΨ − f*(α) − γ·g*(β/γ)
//! ```
//!
//! The dual variables are updated by projected subgradient ascent, and the
//! primal player answers each dual iterate with an optimistic plan against
//! the linear cost `c_h(s, a) = θ_h · ψ_h(s, a)`, `θ = α + β`, chosen over a
//! confidence set of transition models.
//!
//! Modules:
//! - [`embedding`]: finite models, feature maps, occupancy measures, embeddings.
//! - [`fenchel`]: convex oracles with closed-form conjugates and perspectives.
//! - [`dualopt`]: projections, dual ascent, online projected subgradient.
//! - [`knr`]: kernelized nonlinear regulator dynamics and ridge confidence sets.
//! - [`lowrank`]: finite low-rank model classes, MLE and confidence members.
//! - [`planner`]: value iteration and the optimistic planners.
//! - [`vpdpo`]: the episode loop, ground-truth comparator and metrics.
//! - [`harness`]: configuration, presets and result emission.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dualopt;
pub mod embedding;
pub mod error;
pub mod fenchel;
pub mod harness;
pub mod knr;
pub mod linalg;
pub mod lowrank;
pub mod planner;
pub mod rng;
pub mod vpdpo;

pub use error::{Error, Result};
