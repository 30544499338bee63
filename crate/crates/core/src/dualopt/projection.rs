use crate::error::{Error, Result};
use crate::linalg::{norm, scale};

/// Displacement tolerance of the alternating projections.
pub const DYKSTRA_TOL: f64 = 1e-10;
/// Sweep budget of the alternating projections.
pub const DYKSTRA_MAX_SWEEPS: usize = 1000;

/// Euclidean projection onto `{x : ‖x‖₂ ≤ radius}`.
pub fn project_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let n = norm(v);
    if n <= radius {
        v.to_vec()
    } else {
        scale(v, radius / n)
    }
}

/// Euclidean projection onto the cone `{(β, γ) : ‖β‖₂ ≤ slope·γ}`.
pub fn project_cone(beta: &[f64], gamma: f64, slope: f64) -> (Vec<f64>, f64) {
    let n = norm(beta);
    if n <= slope * gamma {
        return (beta.to_vec(), gamma);
    }
    if slope * n <= -gamma {
        return (vec![0.0; beta.len()], 0.0);
    }
    let tau = (slope * n + gamma) / (slope * slope + 1.0);
    (scale(beta, slope * tau / n), tau)
}

/// Euclidean projection onto `{(β, γ) : ‖β‖₂ ≤ slope·γ, 0 ≤ γ ≤ cap}` by
/// Dykstra's alternating projections between the cone and the slab.
pub fn project_cone_slab(beta: &[f64], gamma: f64, cap: f64, slope: f64) -> Result<(Vec<f64>, f64)> {
    if !(cap > 0.0) || !(slope > 0.0) {
        return Err(Error::Argument(format!(
            "cone-slab projection needs positive cap and slope, got {cap} and {slope}"
        )));
    }
    let dim = beta.len();
    let mut y_beta = beta.to_vec();
    let mut y_gamma = gamma;
    // Dykstra corrections for the cone and the slab
    let mut p_beta = vec![0.0; dim];
    let mut p_gamma = 0.0;
    let mut q_gamma = 0.0;
    let mut last_step = f64::INFINITY;
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let shifted: Vec<f64> = y_beta.iter().zip(&p_beta).map(|(y, p)| y + p).collect();
        let (a_beta, a_gamma) = project_cone(&shifted, y_gamma + p_gamma, slope);
        for ((p, s), a) in p_beta.iter_mut().zip(&shifted).zip(&a_beta) {
            *p = s - a;
        }
        p_gamma = y_gamma + p_gamma - a_gamma;

        // the slab only constrains γ, so its β correction stays zero
        let b_gamma = (a_gamma + q_gamma).clamp(0.0, cap);
        q_gamma = a_gamma + q_gamma - b_gamma;

        let step = (y_beta.iter().zip(&a_beta).map(|(y, a)| (y - a) * (y - a)).sum::<f64>()
            + (y_gamma - b_gamma).powi(2))
        .sqrt();
        y_beta = a_beta;
        y_gamma = b_gamma;
        last_step = step;
        if step <= DYKSTRA_TOL {
            let n = norm(&y_beta);
            if n > slope * y_gamma {
                // remove the residual cone violation left by the last slab step
                y_beta = scale(&y_beta, slope * y_gamma / n);
            }
            return Ok((y_beta, y_gamma));
        }
    }
    Err(Error::Numerical(format!(
        "cone-slab projection did not converge in {DYKSTRA_MAX_SWEEPS} sweeps \
         (last displacement {last_step:e}, input norm {}, gamma {gamma}, cap {cap})",
        norm(beta)
    )))
}
