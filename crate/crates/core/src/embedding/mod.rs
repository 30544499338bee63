//! Occupancy measures and kernel embeddings.
//!
//! For a finite model the per-stage occupancy `d_h(s, a)` is computed exactly
//! by forward dynamic programming and the embedding is
//! `Ψ_h = Σ_{s,a} d_h(s, a) ψ_h(s, a)`. For samplers with continuous state
//! the embedding is estimated by Monte Carlo rollouts.

mod features;
mod model;
mod monte_carlo;
mod occupancy;

pub use features::{FeatureMap, StageMapped, TabularFeatures};
pub(crate) use model::{inverse_cdf, normalize_row};
pub use model::{FiniteModel, MAX_TABLE_ENTRIES};
pub use monte_carlo::{monte_carlo_embedding, rollout, RolloutPolicy, TransitionSampler};
pub use occupancy::{compute_occupancy, embedding_of_policy, kernel_embedding, KernelEmbedding, OccupancyMeasure};
