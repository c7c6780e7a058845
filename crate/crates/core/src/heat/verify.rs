use serde::{Deserialize, Serialize};

use super::kernel::{adjoint_run, forward_run, FlowPoint};
use super::stage::ExpansionFlow;
use crate::error::Result;
use crate::fit::smallest_feasible;
use crate::grid::{distances_from, gradient_norm, Stencil};

/// A kernel source `(y, s)` evaluated at time `t` (all active `x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub y: usize,
    pub s: f64,
    pub t: f64,
}

/// A gradient probe: `|∇_y G(x, t; y, s)|·√(s − t_j)` for step times `s` just after junction `t_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientProbe {
    pub x: usize,
    pub t: f64,
    /// Index of the stage whose start time is the junction `t_j`.
    pub stage: usize,
    /// Largest `s − t_j` probed; the sweep covers one decade below it.
    pub max_offset: f64,
}

/// Measured kernel properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// `max |∫G − 1|` over step times before any mask shrink.
    pub mass_deviation: f64,
    /// `max ∫G` over step times after a mask shrink (0 when there is none).
    pub l1_after_shrink: f64,
    /// Largest relative gap between direct and composed kernels through a midpoint time.
    pub reproduction_residual: f64,
    /// Smallest `C` with `G ≤ C/(t−s)·exp(−d_{s⁺}²/(C(t−s)))` at every sampled point.
    pub gaussian_c: Option<f64>,
    pub gaussian_points: usize,
    /// Fraction of sampled points satisfying the bound with `gaussian_c`.
    pub gaussian_fraction: f64,
    /// `(s − t_j, sup_y |∇G|·√(s − t_j))` from the gradient probes.
    pub gradient_series: Vec<(f64, f64)>,
    /// `max sup_y |∇G|·√(s − t_j)`.
    pub gradient_c: Option<f64>,
    /// Most negative kernel value seen.
    pub min_value: f64,
}

fn midpoint(exp: &ExpansionFlow, s: f64, t: f64) -> Option<f64> {
    // A step time strictly between s and t, taken from the stage of the midpoint.
    let mid = 0.5 * (s + t);
    let st = &exp.stages()[exp.eval_stage(mid).ok()?];
    let k = ((mid - st.t_start) / st.dt()).round() as usize;
    let k = k.clamp(0, st.steps());
    let tm = st.frame_time(k);
    (tm > s && tm < t).then_some(tm)
}

/// Mass, reproduction, Gaussian and gradient audit.
pub fn verify_kernel_properties(
    exp: &ExpansionFlow,
    samples: &[KernelSample],
    probes: &[GradientProbe],
) -> Result<KernelReport> {
    let stages = exp.stages();
    let mut mass_dev = 0.0_f64;
    let mut l1_shrink = 0.0_f64;
    let mut repro = 0.0_f64;
    let mut min_value = 0.0_f64;
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    for sample in samples {
        let src_stage = exp.source_stage(sample.s)?;
        let mut shrunk = false;
        let mut mid_field: Option<(FlowPoint, Vec<f64>)> = None;
        let tm = midpoint(exp, sample.s, sample.t);
        let slice = forward_run(exp, sample.y, sample.s, sample.t, |p, f| {
            let st = &stages[p.stage];
            if p.stage > src_stage && st.mask() != stages[p.stage - 1].mask() {
                shrunk = true;
            }
            let w = st.weights(p.frame);
            let mass: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
            if shrunk {
                l1_shrink = l1_shrink.max(mass);
            } else {
                mass_dev = mass_dev.max((mass - 1.0).abs());
            }
            min_value = min_value.min(f.iter().copied().fold(0.0, f64::min));
            if Some(p.time) == tm && mid_field.as_ref().is_none_or(|(q, _)| q.stage < p.stage) {
                mid_field = Some((p, f.to_vec()));
            }
        })?;
        let eval = &stages[slice.stage];
        let src = &stages[src_stage];
        let dist = distances_from(
            &src.manifold(src.frame_index(sample.s)?),
            sample.y,
            Stencil::default(),
        )?;
        let span = sample.t - sample.s;
        for x in 0..slice.values.len() {
            if eval.mask()[x] && dist[x].is_finite() {
                points.push((slice.values[x].max(0.0), span, dist[x]));
            }
        }
        if let Some((p, fwd)) = mid_field {
            let x = (0..slice.values.len())
                .filter(|&c| eval.mask()[c])
                .max_by(|&a, &b| slice.values[a].total_cmp(&slice.values[b]))
                .unwrap_or(sample.y);
            let direct = slice.values[x];
            let mut composed = None;
            adjoint_run(exp, x, sample.t, p.time, |q, field| {
                if q.stage == p.stage && q.frame == p.frame {
                    let w = stages[p.stage].weights(p.frame);
                    composed = Some(
                        (0..field.len())
                            .map(|z| field[z] * fwd[z] * w[z])
                            .sum::<f64>(),
                    );
                }
            })?;
            if let Some(c) = composed {
                repro = repro.max((direct - c).abs() / direct.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    let gaussian_c = smallest_feasible(|c| {
        points
            .iter()
            .all(|&(g, span, d)| g <= c / span * (-d * d / (c * span)).exp())
    });
    let gaussian_fraction = match gaussian_c {
        Some(c) => {
            let ok = points
                .iter()
                .filter(|&&(g, span, d)| g <= c / span * (-d * d / (c * span)).exp())
                .count();
            ok as f64 / points.len().max(1) as f64
        }
        None => 0.0,
    };

    let mut gradient_series = Vec::new();
    for probe in probes {
        let stage = &stages[probe.stage];
        let tj = stage.t_start;
        let lo = tj + 0.1 * probe.max_offset;
        let k_lo = ((lo - tj) / stage.dt()).ceil().max(1.0) as usize;
        let s_min = stage.frame_time(k_lo.min(stage.steps()));
        adjoint_run(exp, probe.x, probe.t, s_min, |p, field| {
            let offset = p.time - tj;
            if p.stage == probe.stage && offset > 0.0 && offset <= probe.max_offset * (1.0 + 1e-12)
            {
                let g = gradient_norm(field, &stage.manifold(p.frame)).expect("matching sizes");
                let sup = g.iter().copied().fold(0.0, f64::max);
                gradient_series.push((offset, sup * offset.sqrt()));
            }
        })?;
    }
    let gradient_c = gradient_series.iter().map(|(_, v)| *v).reduce(f64::max);
    Ok(KernelReport {
        mass_deviation: mass_dev,
        l1_after_shrink: l1_shrink,
        reproduction_residual: repro,
        gaussian_c,
        gaussian_points: points.len(),
        gaussian_fraction,
        gradient_series,
        gradient_c,
        min_value,
    })
}
