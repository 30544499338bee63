use crate::embedding::{inverse_cdf, RolloutPolicy};
use crate::error::{check_dim, Error, Result};

const DIST_TOL: f64 = 1e-12;

/// Markov policy `π_h(· | s)` over finite states and actions, stored as a
/// dense `[h][s][a]` probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePolicy {
    horizon: usize,
    states: usize,
    actions: usize,
    probs: Vec<f64>,
}

impl StagePolicy {
    /// Deterministic policy from an `[h][s]` action table.
    pub fn deterministic(horizon: usize, states: usize, actions: usize, choice: &[usize]) -> Result<Self> {
        check_dim("deterministic policy", horizon * states, choice.len())?;
        let mut probs = vec![0.0; horizon * states * actions];
        for (i, &a) in choice.iter().enumerate() {
            if a >= actions {
                return Err(Error::Config(format!("action {a} out of range for A={actions}")));
            }
            probs[i * actions + a] = 1.0;
        }
        Ok(Self {
            horizon,
            states,
            actions,
            probs,
        })
    }

    pub fn uniform(horizon: usize, states: usize, actions: usize) -> Self {
        Self {
            horizon,
            states,
            actions,
            probs: vec![1.0 / actions as f64; horizon * states * actions],
        }
    }

    pub fn from_probs(horizon: usize, states: usize, actions: usize, probs: Vec<f64>) -> Result<Self> {
        check_dim("policy table", horizon * states * actions, probs.len())?;
        for (i, row) in probs.chunks(actions).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > DIST_TOL {
                return Err(Error::Config(format!(
                    "policy row (h={}, s={}) is not a distribution (sum {sum})",
                    i / states,
                    i % states
                )));
            }
        }
        Ok(Self {
            horizon,
            states,
            actions,
            probs,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn probs(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.states + s) * self.actions;
        &self.probs[start..start + self.actions]
    }

    /// The `[h][s]` action table if every row is a point mass.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        self.probs
            .chunks(self.actions)
            .map(|row| row.iter().position(|p| *p == 1.0))
            .collect()
    }
}

impl RolloutPolicy<usize> for StagePolicy {
    fn num_actions(&self) -> usize {
        self.actions
    }

    fn act(&self, h: usize, s: &usize, u: f64) -> usize {
        inverse_cdf(self.probs(h, *s), u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_round_trip() {
        let p = StagePolicy::deterministic(2, 2, 3, &[0, 2, 1, 1]).unwrap();
        assert_eq!(p.as_deterministic(), Some(vec![0, 2, 1, 1]));
        assert_eq!(p.act(0, &1, 0.99), 2);
        assert_eq!(StagePolicy::uniform(1, 1, 2).as_deterministic(), None);
    }

    #[test]
    fn rejects_non_distribution() {
        assert!(StagePolicy::from_probs(1, 1, 2, vec![0.5, 0.6]).is_err());
        assert!(StagePolicy::deterministic(1, 1, 2, &[2]).is_err());
    }
}
