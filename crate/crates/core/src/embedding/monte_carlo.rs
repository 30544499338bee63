use std::borrow::Borrow;

use rand::Rng;

use super::{FeatureMap, FiniteModel, KernelEmbedding};
use crate::error::{Error, Result};
use crate::rng::stage_rng;

/// A simulator that draws next states.
pub trait TransitionSampler {
    type State: Clone;

    fn horizon(&self) -> usize;
    fn initial_state(&self) -> Self::State;
    fn sample_next<R: Rng + ?Sized>(&self, h: usize, s: &Self::State, a: usize, rng: &mut R) -> Self::State;
}

/// A policy that maps a uniform draw `u ∈ [0, 1)` to an action.
pub trait RolloutPolicy<S: ?Sized> {
    fn num_actions(&self) -> usize;
    fn act(&self, h: usize, s: &S, u: f64) -> usize;
}

impl TransitionSampler for FiniteModel {
    type State = usize;

    fn horizon(&self) -> usize {
        FiniteModel::horizon(self)
    }

    fn initial_state(&self) -> usize {
        FiniteModel::initial_state(self)
    }

    fn sample_next<R: Rng + ?Sized>(&self, h: usize, s: &usize, a: usize, rng: &mut R) -> usize {
        self.sample_next(h, *s, a, rng.random())
    }
}

/// One trajectory `(s_h, a_h)_{h<H}`. Stage `h` draws from the stream
/// `(seed, episode, h)`: first the action, then the next state.
pub fn rollout<M, P, S>(sampler: &M, policy: &P, seed: u64, episode: u64) -> Vec<(M::State, usize)>
where
    M: TransitionSampler,
    M::State: Borrow<S>,
    P: RolloutPolicy<S>,
    S: ?Sized,
{
    let horizon = sampler.horizon();
    let mut out = Vec::with_capacity(horizon);
    let mut s = sampler.initial_state();
    for h in 0..horizon {
        let mut rng = stage_rng(seed, episode, h as u64);
        let a = policy.act(h, s.borrow(), rng.random());
        let next = if h + 1 < horizon {
            Some(sampler.sample_next(h, &s, a, &mut rng))
        } else {
            None
        };
        out.push((s, a));
        match next {
            Some(n) => s = n,
            None => break,
        }
    }
    out
}

/// Sample mean of `ψ_h(s_h, a_h)` over `n` trajectories; trajectory `i`
/// uses episode stream `i` of `seed`.
pub fn monte_carlo_embedding<M, P, F, S>(
    sampler: &M,
    policy: &P,
    features: &F,
    n: usize,
    seed: u64,
) -> Result<KernelEmbedding>
where
    M: TransitionSampler,
    M::State: Borrow<S>,
    P: RolloutPolicy<S>,
    F: FeatureMap<S>,
    S: ?Sized,
{
    if n == 0 {
        return Err(Error::Argument("Monte Carlo sample count must be positive".into()));
    }
    let d = features.dim();
    let mut out = KernelEmbedding::zeros(sampler.horizon(), d);
    let mut psi = vec![0.0; d];
    for i in 0..n {
        let k = (i + 1) as f64;
        for (h, (s, a)) in rollout(sampler, policy, seed, i as u64).iter().enumerate() {
            features.eval_into(h, s.borrow(), *a, &mut psi);
            // running mean keeps constant samples exact
            for (m, x) in out.block_mut(h).iter_mut().zip(&psi) {
                *m += (x - *m) / k;
            }
        }
    }
    Ok(out)
}
