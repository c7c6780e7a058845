use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::pipeline::{frame_curvature, ExpansionRun};
use super::schedule::j_sum_bound;
use crate::curvature::ConeSpec;
use crate::cutoff::{build_cutoff, CutoffParams};
use crate::error::{Error, Result};
use crate::grid::{gradient_norm, laplacian_apply, DiscreteManifold};
use crate::heat::adjoint_run;

/// Options for [`ell_integral_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Collar width `r`; defaults to `width_scale·t_{i+2}^{1/4}` in schedule units.
    pub width: Option<f64>,
    /// Absolute slack allowed in `ℓ(x, t) ≤ bound`.
    pub tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            width: None,
            tol: 1e-12,
        }
    }
}

/// The three terms bounding `ℓ(x, t)` through the conjugate heat kernel from `t₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllEstimateTrace {
    pub point: (usize, f64),
    pub stage: usize,
    pub width: f64,
    pub radius: f64,
    /// `∫G·φ·ℒ` at `t₁`.
    pub boundary_term: f64,
    /// `∫∫G·ℒ·(|Δφ| + |∂φ/∂s|)`.
    pub i_term: f64,
    /// `∫∫2|∇G||∇φ|·ℒ`.
    pub j_term: f64,
    pub measured_ell: f64,
    /// `e^{Ct}(boundary + 𝓘 + 𝓙)`.
    pub bound: f64,
    pub evolution_c: f64,
    pub passes: bool,
    /// `boundary/(2α₀)`.
    pub boundary_ratio: f64,
    /// `boundary/(𝓘 + 𝓙)`, infinite when both vanish.
    pub dominance: f64,
    /// Smallest `C` with `𝓙 ≤ C·exp(−1/(C√t_{i+2}))·√((ν−1)t_{i+2})/(√ν−1)`.
    pub j_series_constant: f64,
    /// `φ(x, t)`.
    pub cutoff_at_point: f64,
}

fn j_constant(j: f64, t: f64, series: f64) -> f64 {
    if j <= 0.0 {
        return 0.0;
    }
    let f = |c: f64| c * (-1.0 / (c * t.sqrt())).exp() * series - j;
    let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    hi
}

/// Evaluates the localized estimate at `(x, t)`, `t` a frame time of an expansion stage.
pub fn ell_integral_estimate(
    run: &ExpansionRun,
    x: usize,
    t: f64,
    cone: &ConeSpec,
    opts: EstimateOptions,
) -> Result<EllEstimateTrace> {
    let exp = &run.flow;
    let stages = exp.stages();
    let t1 = run.times[1];
    let i = exp.eval_stage(t)?;
    if i == 0 {
        return Err(Error::OutOfDomain {
            t,
            reason: format!("estimate times must follow t₁ = {t1}"),
        });
    }
    if !run.balls[i - 1][x] {
        return Err(Error::InvalidInput(format!(
            "cell {x} is outside the scheduled ball of stage {i}"
        )));
    }
    let r = opts
        .width
        .unwrap_or_else(|| run.width_scale * run.schedule.t_seq[i].powf(0.25));
    let eval = &stages[i];
    let kt = eval.frame_index(t)?;
    let mut frames = Vec::new();
    for (st, stage) in stages.iter().enumerate().take(i + 1).skip(1) {
        let first = if st == 1 { 0 } else { 1 };
        let last = if st == i { kt } else { stage.steps() };
        frames.extend((first..=last).map(|k| (st, k)));
    }
    let snaps: Vec<(f64, DiscreteManifold)> = frames
        .iter()
        .map(|&(st, k)| {
            let man = stages[st].manifold(k).with_mask(eval.mask().to_vec());
            man.map(|m| (stages[st].frame_time(k) - t1, m))
        })
        .collect::<Result<_>>()?;
    let cal = &run.calibration;
    let params = CutoffParams {
        radius: 3.0 * r,
        width: r,
        k: cal.k,
        c0: cal.c1,
        beta: cal.beta,
    };
    let cutoff = build_cutoff(&snaps, x, params)?;

    let mut kernel: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    adjoint_run(exp, x, t, t1, |p, q| {
        kernel.insert((p.stage, p.frame), q.to_vec());
    })?;
    let c = cal.evolution_c;
    let big_l = |st: usize, k: usize| -> Result<Vec<f64>> {
        let decay = (-c * stages[st].frame_time(k)).exp();
        Ok(frame_curvature(&stages[st], k)
            .ell_values(cone)?
            .into_iter()
            .map(|l| l * decay)
            .collect())
    };
    let dot = |a: &[f64], b: &[f64], w: &[f64]| {
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((a, b), w)| a * b * w)
            .sum::<f64>()
    };

    let l0 = big_l(1, 0)?;
    let phi0 = &cutoff.phi[0];
    let g0 = &kernel[&(1, 0)];
    let w0 = stages[1].weights(0);
    let integrand: Vec<f64> = phi0.iter().zip(&l0).map(|(p, l)| p * l).collect();
    let boundary = dot(g0, &integrand, &w0);

    let (mut i_term, mut j_term) = (0.0, 0.0);
    for n in 1..frames.len() {
        let (st, k) = frames[n];
        let dt = stages[st].dt();
        let man = &snaps[n].1;
        let phi = &cutoff.phi[n];
        let prev = &cutoff.phi[n - 1];
        let lap = laplacian_apply(phi, man)?;
        let grad_phi = gradient_norm(phi, man)?;
        let q = &kernel[&(st, k)];
        let grad_q = gradient_norm(q, man)?;
        let l = big_l(st, k)?;
        let w = stages[st].weights(k);
        for cell in 0..q.len() {
            if !man.is_active(cell) || l[cell] == 0.0 {
                continue;
            }
            let mu = lap[cell].abs() + (phi[cell] - prev[cell]).abs() / dt;
            i_term += dt * q[cell] * l[cell] * mu * w[cell];
            j_term += dt * 2.0 * grad_q[cell] * grad_phi[cell] * l[cell] * w[cell];
        }
    }
    let measured = frame_curvature(eval, kt).ell_values(cone)?[x];
    let bound = (c * t).exp() * (boundary + i_term + j_term);
    let t_next = stages[i].t_end;
    let series = j_sum_bound(run.schedule.nu, t_next);
    Ok(EllEstimateTrace {
        point: (x, t),
        stage: i,
        width: r,
        radius: 3.0 * r,
        boundary_term: boundary,
        i_term,
        j_term,
        measured_ell: measured,
        bound,
        evolution_c: c,
        passes: measured <= bound + opts.tol,
        boundary_ratio: if run.alpha0 > 0.0 {
            boundary / (2.0 * run.alpha0)
        } else {
            0.0
        },
        dominance: if i_term + j_term > 0.0 {
            boundary / (i_term + j_term)
        } else {
            f64::INFINITY
        },
        j_series_constant: j_constant(j_term, t_next, series),
        cutoff_at_point: cutoff.phi[frames.len() - 1][x],
    })
}
