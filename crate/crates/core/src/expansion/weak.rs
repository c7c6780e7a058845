use serde::{Deserialize, Serialize};

use super::pipeline::frame_curvature;
use crate::curvature::ConeSpec;
use crate::error::{Error, Result};
use crate::grid::{laplacian_apply, DiscreteManifold};
use crate::heat::ExpansionFlow;

/// Both sides of `∫ℒψ|_a^b ≤ ∫∫ℒ(Δψ + ∂ψ/∂t)` and of its envelope form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    pub window: (f64, f64),
    pub steps: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    /// Right side with `Δψ ≤ u`, `∂ψ/∂t ≤ v` replaced by the envelopes.
    pub envelope_rhs: Option<f64>,
    pub envelope_slack: Option<f64>,
    /// Whether the envelopes dominate the measured `Δψ` and `∂ψ/∂t` on every sample.
    pub envelope_valid: Option<bool>,
}

fn ring(psi: &[f64], man: &DiscreteManifold) -> Vec<bool> {
    (0..psi.len())
        .map(|c| {
            man.is_active(c) && (psi[c] != 0.0 || man.neighbours(c).iter().any(|&n| psi[n] != 0.0))
        })
        .collect()
}

/// Checks the integrated weak inequality for `ℒ = e^{−Ct}ℓ` over the steps of `exp` inside
/// `[a, b]`. `psi(t, metric)` gives the test field; `envelopes` are constant bounds `(u, v)`
/// used on the support of `ψ` and its neighbours.
pub fn weak_inequality_check<P: Fn(f64, &DiscreteManifold) -> Vec<f64>>(
    exp: &ExpansionFlow,
    c: f64,
    cone: &ConeSpec,
    psi: P,
    envelopes: Option<(f64, f64)>,
    window: (f64, f64),
) -> Result<WeakReport> {
    let (a, b) = window;
    if !(b > a) {
        return Err(Error::InvalidInput(format!("window [{a}, {b}] is empty")));
    }
    let (mut lhs, mut rhs, mut env, mut steps) = (0.0, 0.0, 0.0, 0);
    let mut valid = true;
    for stage in exp.stages() {
        let slop = 1e-9 * stage.dt();
        let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>)> = None;
        for k in 0..=stage.steps() {
            let t = stage.frame_time(k);
            if t < a - slop || t > b + slop {
                prev = None;
                continue;
            }
            let man = stage.manifold(k);
            let p = psi(t, &man);
            if p.iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "test field is negative at t = {t}"
                )));
            }
            let decay = (-c * t).exp();
            let l: Vec<f64> = frame_curvature(stage, k)
                .ell_values(cone)?
                .into_iter()
                .map(|v| v * decay)
                .collect();
            let w = stage.weights(k);
            let lap = laplacian_apply(&p, &man)?;
            let support = ring(&p, &man);
            if let Some((p0, l0, w0, lap0, sup0)) = &prev {
                let dt = stage.dt();
                let e1: f64 = (0..p.len()).map(|c| l[c] * p[c] * w[c]).sum();
                let e0: f64 = (0..p.len()).map(|c| l0[c] * p0[c] * w0[c]).sum();
                lhs += e1 - e0;
                for cell in 0..p.len() {
                    let (lw1, lw0) = (l[cell] * w[cell], l0[cell] * w0[cell]);
                    let rate = (p[cell] - p0[cell]) / dt;
                    rhs += 0.5 * dt * (lw1 * lap[cell] + lw0 * lap0[cell])
                        + 0.5 * (lw1 + lw0) * (p[cell] - p0[cell]);
                    if let Some((u, v)) = envelopes {
                        let (in1, in0) = (support[cell], sup0[cell]);
                        env += 0.5
                            * dt
                            * (u + v)
                            * (if in1 { lw1 } else { 0.0 } + if in0 { lw0 } else { 0.0 });
                        if (in1 && (lap[cell] > u || rate > v)) || (in0 && lap0[cell] > u) {
                            valid = false;
                        }
                    }
                }
                steps += 1;
            }
            prev = Some((p, l, w, lap, support));
        }
    }
    let envelope_rhs = envelopes.map(|_| env);
    Ok(WeakReport {
        window,
        steps,
        lhs,
        rhs,
        slack: rhs - lhs,
        envelope_rhs,
        envelope_slack: envelope_rhs.map(|e| e - lhs),
        envelope_valid: envelopes.map(|_| valid),
    })
}
