use serde::Serialize;

use super::{EpisodeRecord, GroundTruth};
use crate::fenchel::ConvexOracle;
use crate::linalg::norm;

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub t: usize,
    pub f_hat: f64,
    pub g_hat: f64,
    pub f_mixed: f64,
    pub g_mixed: f64,
    /// `f(Ψ^{π̂}) − f(Ψ*)`; NaN without a comparator.
    pub regret_avg: f64,
    /// `g(Ψ^{π̂})`; NaN when unconstrained.
    pub violation_avg: f64,
    pub gamma: f64,
    pub alpha_norm: f64,
    pub beta_norm: f64,
    pub v1_plan: f64,
    pub coverage: bool,
}

impl MetricRow {
    pub const HEADER: [&'static str; 12] = [
        "t",
        "f_hat",
        "g_hat",
        "f_mixed",
        "g_mixed",
        "regret_avg",
        "violation_avg",
        "gamma",
        "alpha_norm",
        "beta_norm",
        "V1_plan",
        "coverage_flag",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    /// `T·(f(Ψ^{π̂}) − f(Ψ*))`
    pub regret: f64,
    /// `T·g(Ψ^{π̂})`, unclipped.
    pub violation: f64,
    /// `Σ_t (f(Ψ^{π_t}) − f(Ψ*))`
    pub cumulative_gap: f64,
    /// `Σ_t θ^t·(Ψ^t − Ψ*)`
    pub optimism_sum: f64,
    /// Whether every confidence set contained the truth.
    pub covered: bool,
    pub curve: Vec<MetricRow>,
}

/// Mixed-policy regret and violation after the last record, with the
/// per-episode curve. Without a comparator the regret terms are NaN.
pub fn regret_violation(
    records: &[EpisodeRecord],
    truth: Option<&GroundTruth>,
    objective: &ConvexOracle,
    constraint: Option<&ConvexOracle>,
) -> RegretReport {
    let f_star = truth.map_or(f64::NAN, |g| g.value);
    let curve: Vec<MetricRow> = records
        .iter()
        .map(|r| {
            let f_mixed = objective.value(r.mixed.as_slice());
            let g_mixed = constraint.map_or(f64::NAN, |g| g.value(r.mixed.as_slice()));
            MetricRow {
                t: r.t,
                f_hat: objective.value(r.planned_mean.as_slice()),
                g_hat: constraint.map_or(f64::NAN, |g| g.value(r.planned_mean.as_slice())),
                f_mixed,
                g_mixed,
                regret_avg: f_mixed - f_star,
                violation_avg: g_mixed,
                gamma: r.dual.gamma(),
                alpha_norm: norm(r.dual.alpha()),
                beta_norm: norm(r.dual.beta()),
                v1_plan: r.plan_value,
                coverage: r.coverage,
            }
        })
        .collect();
    let n = records.len() as f64;
    let (regret, violation) = match curve.last() {
        Some(row) => (n * row.regret_avg, n * row.violation_avg),
        None => (0.0, 0.0),
    };
    let cumulative_gap = records
        .iter()
        .map(|r| objective.value(r.realized.as_slice()) - f_star)
        .sum();
    let optimism_sum = match truth {
        Some(gt) => records
            .iter()
            .map(|r| {
                let theta = r.dual.theta();
                r.planned.dot(theta) - gt.embedding.dot(theta)
            })
            .sum(),
        None => f64::NAN,
    };
    RegretReport {
        regret,
        violation,
        cumulative_gap,
        optimism_sum,
        covered: records.iter().all(|r| r.coverage),
        curve,
    }
}
