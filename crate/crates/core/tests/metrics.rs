use vpdpo::dualopt::DualState;
use vpdpo::embedding::KernelEmbedding;
use vpdpo::fenchel::ConvexOracle;
use vpdpo::planner::PlannedModel;
use vpdpo::vpdpo::{regret_violation, EpisodeRecord, GroundTruth, TruthMode};

fn emb(v: &[f64]) -> KernelEmbedding {
    KernelEmbedding::new(1, v.len(), v.to_vec()).unwrap()
}

/// Records whose true embeddings are `psi` and planned ones `planned`,
/// with running means filled in by hand.
fn fixture(psi: &[[f64; 2]], planned: &[[f64; 2]], f: &ConvexOracle, g: &ConvexOracle) -> Vec<EpisodeRecord> {
    let dual = DualState::initial(f, Some(g), 1.0).unwrap();
    let mut out = Vec::new();
    let (mut sum_p, mut sum_q) = ([0.0; 2], [0.0; 2]);
    for (i, (q, p)) in psi.iter().zip(planned).enumerate() {
        let k = (i + 1) as f64;
        for j in 0..2 {
            sum_q[j] += q[j];
            sum_p[j] += p[j];
        }
        let mean_q = [sum_q[0] / k, sum_q[1] / k];
        let mean_p = [sum_p[0] / k, sum_p[1] / k];
        out.push(EpisodeRecord {
            t: i + 1,
            dual: dual.clone(),
            plan_value: 0.0,
            plan_model: PlannedModel::Known,
            planned: emb(p),
            realized: emb(q),
            realized_stderr: 0.0,
            trajectory: emb(q),
            planned_mean: emb(&mean_p),
            mixed: emb(&mean_q),
            f_hat: f.value(&mean_p),
            g_hat: Some(g.value(&mean_p)),
            f_mixed: f.value(&mean_q),
            g_mixed: Some(g.value(&mean_q)),
            coverage: true,
            estimation_error: None,
            warnings: Vec::new(),
        });
    }
    out
}

fn truth(psi: [f64; 2], value: f64) -> GroundTruth {
    GroundTruth {
        embedding: emb(&psi),
        value,
        constraint_value: None,
        multiplier: 0.0,
        weights: vec![1.0],
        policies: vec![vec![0]],
        gap: 0.0,
        mode: TruthMode::Enumerate,
    }
}

#[test]
fn hand_built_records() {
    let f = ConvexOracle::linear(vec![1.0, 2.0]);
    let g = ConvexOracle::affine(vec![1.0, 0.0], -0.5);
    let psi = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [1.0, 1.0]];
    let records = fixture(&psi, &psi, &f, &g);
    let gt = truth([1.0, 0.0], 1.0);
    let report = regret_violation(&records, Some(&gt), &f, Some(&g));
    // mixed embedding (0.625, 0.625): f = 1.875, g = 0.125
    assert!((report.regret - 4.0 * 0.875).abs() <= 1e-12);
    assert!((report.violation - 4.0 * 0.125).abs() <= 1e-12);
    // per-episode values 1, 2, 1.5, 3
    assert!((report.cumulative_gap - 3.5).abs() <= 1e-12);
    let row = &report.curve[1];
    assert!((row.f_mixed - 1.5).abs() <= 1e-12 && (row.g_mixed - 0.0).abs() <= 1e-12);
    assert!((row.regret_avg - 0.5).abs() <= 1e-12);
}

#[test]
fn optimal_episodes_have_zero_regret() {
    let f = ConvexOracle::linear(vec![1.0, 2.0]);
    let g = ConvexOracle::affine(vec![1.0, 0.0], -2.0);
    let psi = [[1.0, 0.0]; 5];
    let report = regret_violation(
        &fixture(&psi, &psi, &f, &g),
        Some(&truth([1.0, 0.0], 1.0)),
        &f,
        Some(&g),
    );
    assert_eq!(report.regret, 0.0);
    assert_eq!(report.violation, -5.0);
    assert_eq!(report.optimism_sum, 0.0);
}

#[test]
fn learner_side_curves_use_the_planned_embeddings() {
    let f = ConvexOracle::dist_point(vec![0.0, 0.0]);
    let g = ConvexOracle::signed_ball(vec![0.0, 0.0], 1.0).unwrap();
    let psi = [[3.0, 4.0], [3.0, 4.0]];
    let planned = [[0.0, 0.0], [0.6, 0.8]];
    let report = regret_violation(&fixture(&psi, &planned, &f, &g), None, &f, Some(&g));
    assert!((report.curve[1].f_hat - 0.5).abs() <= 1e-12);
    assert!((report.curve[1].g_hat + 0.5).abs() <= 1e-12);
    assert!((report.curve[1].f_mixed - 5.0).abs() <= 1e-12);
    assert!(report.regret.is_nan());
}
