use super::projection::project_ball;
use crate::error::{Error, Result};
use crate::linalg::{add, axpy, dot, norm, scale};

/// A concave reward revealed to the learner after it commits to a point.
pub trait ConcaveReward {
    fn value(&self, x: &[f64]) -> f64;
    fn supergradient(&self, x: &[f64]) -> Vec<f64>;

    /// The coefficient vector when the reward is linear.
    fn linear_part(&self) -> Option<&[f64]> {
        None
    }
}

/// `x ↦ c·x`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReward(pub Vec<f64>);

impl ConcaveReward for LinearReward {
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.0, x)
    }

    fn supergradient(&self, _x: &[f64]) -> Vec<f64> {
        self.0.clone()
    }

    fn linear_part(&self) -> Option<&[f64]> {
        Some(&self.0)
    }
}

/// `{x : ‖x − center‖₂ ≤ radius}`
#[derive(Debug, Clone, PartialEq)]
pub struct BallDomain {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallDomain {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let offset: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        add(&self.center, &project_ball(&offset, self.radius))
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

/// How the best fixed point in hindsight is found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparator {
    /// `center + radius·C/‖C‖` for `C = Σ c_t`; needs linear rewards.
    Analytic,
    /// Best point of a uniform grid with this many nodes per axis, clipped
    /// to the ball.
    Grid(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineResult {
    pub iterates: Vec<Vec<f64>>,
    pub comparator: Vec<f64>,
    /// `Σ f_t(x*) − Σ f_t(x_t)`
    pub regret: f64,
}

/// Projected supergradient ascent `x_{t+1} = Π(x_t + η_t g_t)` with
/// `η_t = R/(G√t)`, where `R` is the diameter of the domain and `G` bounds
/// the supergradient norms.
pub fn online_projected_subgradient<F: ConcaveReward>(
    domain: &BallDomain,
    rewards: &[F],
    gradient_bound: f64,
    start: Option<&[f64]>,
    comparator: Comparator,
) -> Result<OnlineResult> {
    if !(gradient_bound > 0.0) {
        return Err(Error::Argument("gradient bound must be positive".into()));
    }
    let dim = domain.center.len();
    let mut x = domain.project(start.unwrap_or(&domain.center));
    let mut iterates = Vec::with_capacity(rewards.len());
    let mut earned = 0.0;
    for (i, f) in rewards.iter().enumerate() {
        iterates.push(x.clone());
        earned += f.value(&x);
        let eta = domain.diameter() / (gradient_bound * ((i + 1) as f64).sqrt());
        let mut next = x.clone();
        axpy(&mut next, eta, &f.supergradient(&x));
        x = domain.project(&next);
    }
    let total = |p: &[f64]| rewards.iter().map(|f| f.value(p)).sum::<f64>();
    let best = match comparator {
        Comparator::Analytic => {
            let mut c = vec![0.0; dim];
            for f in rewards {
                let part = f
                    .linear_part()
                    .ok_or_else(|| Error::Argument("analytic comparator needs linear rewards".into()))?;
                axpy(&mut c, 1.0, part);
            }
            let n = norm(&c);
            if n > 0.0 {
                add(&domain.center, &scale(&c, domain.radius / n))
            } else {
                domain.center.clone()
            }
        }
        Comparator::Grid(nodes) => grid_best(domain, nodes, &total)?,
    };
    let regret = total(&best) - earned;
    Ok(OnlineResult {
        iterates,
        comparator: best,
        regret,
    })
}

fn grid_best(domain: &BallDomain, nodes: usize, total: &dyn Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let dim = domain.center.len();
    let cells = (nodes as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if nodes < 2 || cells > 10_000_000 {
        return Err(Error::Budget(format!(
            "grid comparator with {nodes} nodes in {dim} dimensions is too large"
        )));
    }
    let mut best = domain.center.clone();
    let mut best_value = total(&best);
    for k in 0..cells as usize {
        let mut rem = k;
        let p: Vec<f64> = (0..dim)
            .map(|j| {
                let i = rem % nodes;
                rem /= nodes;
                domain.center[j] + domain.radius * (-1.0 + 2.0 * i as f64 / (nodes - 1) as f64)
            })
            .collect();
        let p = domain.project(&p);
        let v = total(&p);
        if v > best_value {
            best_value = v;
            best = p;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_ball(dim: usize) -> BallDomain {
        BallDomain {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }

    #[test]
    fn constant_reward_regret_within_bound() {
        let c = vec![0.6, -0.8];
        let rewards = vec![LinearReward(c.clone()); 400];
        let dom = unit_ball(2);
        let res = online_projected_subgradient(&dom, &rewards, 1.0, None, Comparator::Analytic).unwrap();
        assert!((res.comparator[0] - 0.6).abs() < 1e-12);
        assert!(res.regret >= 0.0);
        assert!(res.regret <= dom.diameter() * 1.0 * 20.0);
    }

    #[test]
    fn starting_at_the_comparator_has_no_regret() {
        let c = vec![0.0, 2.0];
        let res = online_projected_subgradient(
            &unit_ball(2),
            &[LinearReward(c)],
            2.0,
            Some(&[0.0, 1.0]),
            Comparator::Analytic,
        )
        .unwrap();
        assert_eq!(res.regret, 0.0);
    }

    #[test]
    fn alternating_signs_on_an_interval() {
        let rewards: Vec<LinearReward> = (0..1000)
            .map(|t| LinearReward(vec![if t % 2 == 0 { 1.0 } else { -1.0 }]))
            .collect();
        let res = online_projected_subgradient(&unit_ball(1), &rewards, 1.0, None, Comparator::Grid(2001)).unwrap();
        // every fixed x earns exactly 0 over an even number of rounds
        assert!(res.regret >= -1e-9);
        assert!(res.regret <= 2.0 * (1000f64).sqrt());
    }

    #[test]
    fn random_adversary_regret_is_sublinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dom = unit_ball(3);
        for t in [100usize, 1000] {
            let rewards: Vec<LinearReward> = (0..t)
                .map(|_| {
                    let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                    LinearReward(scale(&v, 1.0 / norm(&v)))
                })
                .collect();
            let res = online_projected_subgradient(&dom, &rewards, 1.0, None, Comparator::Analytic).unwrap();
            assert!(res.regret <= 3.0 * dom.diameter() * (t as f64).sqrt());
        }
    }

    #[test]
    fn analytic_comparator_needs_linear_rewards() {
        struct Quad;
        impl ConcaveReward for Quad {
            fn value(&self, x: &[f64]) -> f64 {
                -dot(x, x)
            }
            fn supergradient(&self, x: &[f64]) -> Vec<f64> {
                scale(x, -2.0)
            }
        }
        let dom = unit_ball(1);
        assert!(online_projected_subgradient(&dom, &[Quad], 2.0, None, Comparator::Analytic).is_err());
        let res = online_projected_subgradient(&dom, &[Quad], 2.0, None, Comparator::Grid(11)).unwrap();
        assert_eq!(res.comparator, vec![0.0]);
    }
}
