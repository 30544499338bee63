//! Convex oracles with closed-form Fenchel conjugates.
//!
//! Every built-in oracle is `L`-Lipschitz, so its conjugate is finite only on
//! the ball of radius `L` (or on a single point for affine functions). The
//! dual ascent works on that domain directly.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, dot, norm, scale, sub};

/// Default clamp on the multiplier inside the perspective `γ·g*(β/γ)`.
pub const DEFAULT_GAMMA_CLAMP: f64 = 1e-8;

const DOMAIN_TOL: f64 = 1e-9;

/// Where the conjugate of an oracle is finite.
#[derive(Debug, Clone, PartialEq)]
pub enum DualDomain {
    /// `{α : ‖α‖₂ ≤ radius}`
    Ball { radius: f64 },
    /// `{c}`, for affine functions.
    Singleton(Vec<f64>),
}

/// A convex function of the flat embedding, selected by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexOracle {
    /// `f(x) = c·x + offset`
    Linear {
        c: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `f(x) = ‖x − target‖₂ + offset`
    DistPoint {
        target: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `f(x) = max(‖x − center‖₂ − radius, 0)`
    DistBall { center: Vec<f64>, radius: f64 },
}

impl ConvexOracle {
    pub fn linear(c: Vec<f64>) -> Self {
        Self::Linear { c, offset: 0.0 }
    }

    /// `f(x) = c·x + offset`; the conjugate is `f*(c) = −offset`.
    pub fn affine(c: Vec<f64>, offset: f64) -> Self {
        Self::Linear { c, offset }
    }

    pub fn dist_point(target: Vec<f64>) -> Self {
        Self::DistPoint { target, offset: 0.0 }
    }

    /// `f(x) = ‖x − center‖₂ − radius`: negative inside the ball, so a
    /// constraint `f ≤ 0` can hold strictly.
    pub fn signed_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::Argument(format!(
                "ball radius must be finite and nonnegative, got {radius}"
            )));
        }
        let oracle = Self::DistPoint {
            target: center,
            offset: -radius,
        };
        oracle.validate()?;
        Ok(oracle)
    }

    pub fn dist_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let oracle = Self::DistBall { center, radius };
        oracle.validate()?;
        Ok(oracle)
    }

    /// Checks parameters that deserialization cannot.
    pub fn validate(&self) -> Result<()> {
        let params = match self {
            Self::Linear { c: params, offset } | Self::DistPoint { target: params, offset } => {
                if !offset.is_finite() {
                    return Err(Error::Argument("oracle offset must be finite".into()));
                }
                params
            }
            Self::DistBall { center, radius } => {
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::Argument(format!(
                        "ball radius must be finite and nonnegative, got {radius}"
                    )));
                }
                center
            }
        };
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("oracle parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Linear { c, .. } => c.len(),
            Self::DistPoint { target, .. } => target.len(),
            Self::DistBall { center, .. } => center.len(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear { .. })
    }

    /// Lipschitz constant, equal to the radius of the dual domain.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Linear { c, .. } => norm(c),
            Self::DistPoint { .. } | Self::DistBall { .. } => 1.0,
        }
    }

    pub fn dual_domain(&self) -> DualDomain {
        match self {
            Self::Linear { c, .. } => DualDomain::Singleton(c.clone()),
            _ => DualDomain::Ball {
                radius: self.lipschitz(),
            },
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Self::Linear { c, offset } => dot(c, x) + offset,
            Self::DistPoint { target, offset } => dist(x, target) + offset,
            Self::DistBall { center, radius } => (dist(x, center) - radius).max(0.0),
        }
    }

    /// Whether `alpha` lies in the dual domain up to a small tolerance.
    pub fn in_dual_domain(&self, alpha: &[f64]) -> bool {
        match self.dual_domain() {
            DualDomain::Ball { radius } => norm(alpha) <= radius + DOMAIN_TOL,
            DualDomain::Singleton(c) => dist(alpha, &c) <= DOMAIN_TOL * (1.0 + norm(&c)),
        }
    }

    /// `f*(α) = sup_x α·x − f(x)` on the dual domain.
    pub fn conjugate(&self, alpha: &[f64]) -> Result<f64> {
        self.check_dual(alpha)?;
        Ok(self.conjugate_formula(alpha))
    }

    /// A point attaining the supremum in `f*(α)`.
    pub fn conjugate_subgradient(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        self.check_dual(alpha)?;
        Ok(self.conjugate_subgradient_formula(alpha))
    }

    /// The dual point attaining `max_α α·x − f*(α) = f(x)`.
    pub fn dual_maximizer(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Linear { c, .. } => c.clone(),
            Self::DistPoint { target: p, .. } | Self::DistBall { center: p, .. } => {
                let diff = sub(x, p);
                let n = norm(&diff);
                let inside = match self {
                    Self::DistBall { radius, .. } => n <= *radius,
                    _ => n == 0.0,
                };
                if inside {
                    vec![0.0; x.len()]
                } else {
                    scale(&diff, 1.0 / n)
                }
            }
        }
    }

    fn check_dual(&self, alpha: &[f64]) -> Result<()> {
        check_dim("dual point", self.dim(), alpha.len())?;
        if self.in_dual_domain(alpha) {
            return Ok(());
        }
        let limit = match self.dual_domain() {
            DualDomain::Ball { radius } => radius,
            DualDomain::Singleton(c) => norm(&c),
        };
        Err(Error::Domain {
            norm: norm(alpha),
            limit,
        })
    }

    // The formulas below extend past the domain boundary; callers check
    // membership first.
    fn conjugate_formula(&self, alpha: &[f64]) -> f64 {
        match self {
            Self::Linear { offset, .. } => -offset,
            Self::DistPoint { target, offset } => dot(alpha, target) - offset,
            Self::DistBall { center, radius } => dot(alpha, center) + radius * norm(alpha),
        }
    }

    fn conjugate_subgradient_formula(&self, alpha: &[f64]) -> Vec<f64> {
        match self {
            Self::Linear { c, .. } => vec![0.0; c.len()],
            Self::DistPoint { target, .. } => target.clone(),
            Self::DistBall { center, radius } => {
                let n = norm(alpha);
                if n > 0.0 {
                    center.iter().zip(alpha).map(|(c, a)| c + radius * a / n).collect()
                } else {
                    center.clone()
                }
            }
        }
    }
}

/// The jointly convex map `(β, γ) ↦ γ·g*(β/γ)` with `γ` clamped below at
/// `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerspectiveTerm {
    oracle: ConvexOracle,
    eps: f64,
}

impl PerspectiveTerm {
    pub fn new(oracle: ConvexOracle) -> Self {
        Self::with_clamp(oracle, DEFAULT_GAMMA_CLAMP)
    }

    pub fn with_clamp(oracle: ConvexOracle, eps: f64) -> Self {
        Self { oracle, eps }
    }

    pub fn oracle(&self) -> &ConvexOracle {
        &self.oracle
    }

    pub fn value(&self, beta: &[f64], gamma: f64) -> Result<f64> {
        self.check(beta, gamma)?;
        if gamma == 0.0 && beta.iter().all(|b| *b == 0.0) {
            return Ok(0.0);
        }
        let g = gamma.max(self.eps);
        Ok(g * self.oracle.conjugate_formula(&scale(beta, 1.0 / g)))
    }

    /// `(∂_β, ∂_γ) = (∂g*(u), g*(u) − u·∂g*(u))` with `u = β/max(γ, eps)`.
    pub fn subgradients(&self, beta: &[f64], gamma: f64) -> Result<(Vec<f64>, f64)> {
        self.check(beta, gamma)?;
        let u = scale(beta, 1.0 / gamma.max(self.eps));
        let grad = self.oracle.conjugate_subgradient_formula(&u);
        let d_gamma = self.oracle.conjugate_formula(&u) - dot(&u, &grad);
        Ok((grad, d_gamma))
    }

    fn check(&self, beta: &[f64], gamma: f64) -> Result<()> {
        check_dim("perspective argument", self.oracle.dim(), beta.len())?;
        if !(gamma >= 0.0) {
            return Err(Error::Argument(format!("multiplier must be nonnegative, got {gamma}")));
        }
        let (gap, limit) = match self.oracle.dual_domain() {
            DualDomain::Ball { radius } => (norm(beta), gamma * radius),
            DualDomain::Singleton(c) => (dist(beta, &scale(&c, gamma)), 0.0),
        };
        if gap > limit + DOMAIN_TOL {
            return Err(Error::Domain {
                norm: norm(beta),
                limit,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-s..s)).collect()
    }

    fn random_in_ball(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
        let v = random_vec(rng, n, 1.0);
        let k = r * rng.random::<f64>() / norm(&v);
        scale(&v, k)
    }

    fn oracles(rng: &mut ChaCha8Rng, n: usize) -> Vec<ConvexOracle> {
        vec![
            ConvexOracle::affine(random_vec(rng, n, 1.0), 0.3),
            ConvexOracle::dist_point(random_vec(rng, n, 1.0)),
            ConvexOracle::dist_ball(random_vec(rng, n, 1.0), 0.4).unwrap(),
            ConvexOracle::dist_ball(random_vec(rng, n, 1.0), 0.0).unwrap(),
            ConvexOracle::signed_ball(random_vec(rng, n, 1.0), 0.5).unwrap(),
        ]
    }

    #[test]
    fn signed_ball_is_negative_inside() {
        let g = ConvexOracle::signed_ball(vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(g.value(&[1.0, 0.0]), -1.0);
        assert_eq!(g.value(&[3.0, 4.0]), 3.0);
        assert_eq!(g.conjugate(&[0.6, 0.8]).unwrap(), 2.0);
        let term = PerspectiveTerm::new(g);
        let (_, d_gamma) = term.subgradients(&[0.3, 0.0], 0.5).unwrap();
        assert_eq!(d_gamma, 2.0);
        assert!(ConvexOracle::signed_ball(vec![0.0], -1.0).is_err());
    }

    #[test]
    fn linear_examples() {
        let zero = ConvexOracle::linear(vec![0.0; 3]);
        assert_eq!(zero.value(&[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(zero.dual_domain(), DualDomain::Singleton(vec![0.0; 3]));
        let e1 = ConvexOracle::linear(vec![1.0, 0.0, 0.0]);
        assert_eq!(e1.value(&[3.0, 4.0, 5.0]), 3.0);
        assert_eq!(e1.conjugate(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(e1.conjugate_subgradient(&[1.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert!(e1.conjugate(&[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn dist_point_examples() {
        let f = ConvexOracle::dist_point(vec![0.0, 0.0]);
        assert_eq!(f.value(&[3.0, 4.0]), 5.0);
        let a = f.dual_maximizer(&[3.0, 4.0]);
        assert!((dot(&a, &[3.0, 4.0]) - f.conjugate(&a).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(f.value(&[0.0, 0.0]), 0.0);
        assert_eq!(f.dual_maximizer(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn dist_ball_examples() {
        let f = ConvexOracle::dist_ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(f.value(&[2.0, 0.0]), 1.0);
        assert_eq!(f.value(&[0.5, 0.5]), 0.0);
        assert_eq!(f.dual_maximizer(&[2.0, 0.0]), vec![1.0, 0.0]);
        // sup over a fine grid of the 1-D slice α = (t, 0)
        let best = (0..=10_000)
            .map(|i| {
                let t = -1.0 + 2.0 * i as f64 / 10_000.0;
                2.0 * t - t.abs()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - 1.0).abs() < 1e-12);
        assert!(ConvexOracle::dist_ball(vec![0.0], -0.1).is_err());
    }

    #[test]
    fn zero_radius_ball_matches_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_vec(&mut rng, 4, 1.0);
        let ball = ConvexOracle::dist_ball(p.clone(), 0.0).unwrap();
        let point = ConvexOracle::dist_point(p);
        for _ in 0..100 {
            let x = random_vec(&mut rng, 4, 2.0);
            let a = random_in_ball(&mut rng, 4, 1.0);
            assert_eq!(ball.value(&x), point.value(&x));
            assert_eq!(ball.conjugate(&a).unwrap(), point.conjugate(&a).unwrap());
        }
    }

    #[test]
    fn closed_form_reconstruction_and_young_fenchel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for f in oracles(&mut rng, 6) {
            for _ in 0..200 {
                let x = random_vec(&mut rng, 6, 2.0);
                let a = f.dual_maximizer(&x);
                let rec = dot(&a, &x) - f.conjugate(&a).unwrap();
                assert!((rec - f.value(&x)).abs() < 1e-12, "{f:?}");
                let probe = match f.dual_domain() {
                    DualDomain::Ball { radius } => random_in_ball(&mut rng, 6, radius),
                    DualDomain::Singleton(c) => c,
                };
                assert!(f.value(&x) + f.conjugate(&probe).unwrap() >= dot(&probe, &x) - 1e-9);
            }
        }
    }

    #[test]
    fn lipschitz_and_midpoint_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in oracles(&mut rng, 5) {
            for _ in 0..500 {
                let x = random_vec(&mut rng, 5, 2.0);
                let y = random_vec(&mut rng, 5, 2.0);
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                assert!(f.value(&mid) <= 0.5 * (f.value(&x) + f.value(&y)) + 1e-9);
                let gap = (f.value(&x) - f.value(&y)).abs();
                assert!(gap <= (f.lipschitz() + 1e-6) * dist(&x, &y));
            }
        }
    }

    #[test]
    fn perspective_examples() {
        let psi0 = vec![0.5, -1.0];
        let term = PerspectiveTerm::new(ConvexOracle::dist_point(psi0.clone()));
        let beta = vec![0.3, 0.1];
        for gamma in [0.5, 1.0, 3.0] {
            assert!((term.value(&beta, gamma).unwrap() - dot(&beta, &psi0)).abs() < 1e-15);
            let (gb, gg) = term.subgradients(&beta, gamma).unwrap();
            assert_eq!(gb, psi0);
            assert!(gg.abs() < 1e-15);
        }
        assert_eq!(term.value(&[0.0, 0.0], 0.0).unwrap(), 0.0);

        let ball = PerspectiveTerm::new(ConvexOracle::dist_ball(vec![0.0, 0.0], 0.7).unwrap());
        assert!((ball.value(&beta, 2.0).unwrap() - 0.7 * norm(&beta)).abs() < 1e-15);
        let (_, gg) = ball.subgradients(&[0.0, 0.0], 2.0).unwrap();
        assert_eq!(gg, 0.0);

        let shifted = ConvexOracle::dist_ball(vec![1.0, 2.0], 0.7).unwrap();
        let t = PerspectiveTerm::new(shifted.clone());
        let (_, gg) = t.subgradients(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(gg, shifted.conjugate(&[0.0, 0.0]).unwrap());
        assert!(matches!(t.value(&[2.0, 0.0], 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn perspective_of_affine_constraint() {
        let term = PerspectiveTerm::new(ConvexOracle::affine(vec![1.0, 2.0], -0.5));
        assert!((term.value(&[2.0, 4.0], 2.0).unwrap() - 1.0).abs() < 1e-15);
        let (gb, gg) = term.subgradients(&[2.0, 4.0], 2.0).unwrap();
        assert_eq!(gb, vec![0.0, 0.0]);
        assert_eq!(gg, 0.5);
        assert!(term.value(&[1.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn perspective_subgradient_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let term = PerspectiveTerm::new(ConvexOracle::dist_ball(random_vec(&mut rng, 3, 1.0), 0.5).unwrap());
        for _ in 0..1000 {
            let g1 = rng.random_range(1e-3..2.0);
            let g2 = rng.random_range(1e-3..2.0);
            let b1 = random_in_ball(&mut rng, 3, g1);
            let b2 = random_in_ball(&mut rng, 3, g2);
            let (db, dg) = term.subgradients(&b1, g1).unwrap();
            let lin = term.value(&b1, g1).unwrap() + dot(&db, &sub(&b2, &b1)) + dg * (g2 - g1);
            assert!(term.value(&b2, g2).unwrap() >= lin - 1e-9);
        }
    }

    #[test]
    fn config_tags_round_trip() {
        let f: ConvexOracle = serde_json::from_str(r#"{"kind":"dist_ball","center":[1.0,2.0],"radius":0.5}"#).unwrap();
        assert_eq!(f, ConvexOracle::dist_ball(vec![1.0, 2.0], 0.5).unwrap());
        let g: ConvexOracle = serde_json::from_str(r#"{"kind":"linear","c":[1.0]}"#).unwrap();
        assert_eq!(g, ConvexOracle::linear(vec![1.0]));
    }

    proptest! {
        #[test]
        fn perspective_is_homogeneous(
            b in prop::collection::vec(-1.0f64..1.0, 3),
            t in 0.01f64..20.0,
            r in 0.0f64..2.0,
        ) {
            let term = PerspectiveTerm::new(ConvexOracle::dist_ball(vec![0.2, -0.4, 0.9], r).unwrap());
            let gamma = norm(&b) + 0.1;
            let v = term.value(&b, gamma).unwrap();
            let vt = term.value(&scale(&b, t), t * gamma).unwrap();
            prop_assert!((vt - t * v).abs() <= 1e-9 * (1.0 + vt.abs()));
        }

        #[test]
        fn perspective_midpoint_convexity(
            b1 in prop::collection::vec(-1.0f64..1.0, 2),
            b2 in prop::collection::vec(-1.0f64..1.0, 2),
            s1 in 1.0f64..3.0,
            s2 in 1.0f64..3.0,
        ) {
            let term = PerspectiveTerm::new(ConvexOracle::dist_ball(vec![0.3, 0.1], 0.6).unwrap());
            let (g1, g2) = (norm(&b1) * s1 + 1e-8, norm(&b2) * s2 + 1e-8);
            let bm: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| 0.5 * (x + y)).collect();
            let vm = term.value(&bm, 0.5 * (g1 + g2)).unwrap();
            let avg = 0.5 * (term.value(&b1, g1).unwrap() + term.value(&b2, g2).unwrap());
            prop_assert!(vm <= avg + 1e-9);
        }
    }
}
