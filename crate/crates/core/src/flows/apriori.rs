use serde::{Deserialize, Serialize};

use super::record::{CurvatureField, FlowRecord, FlowState};
use crate::curvature::ConeSpec;
use crate::error::Result;
use crate::grid::laplacian_apply;

/// Thresholds used when fitting the evolution constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriOptions {
    /// Samples with `ℓ` at or below this value are skipped.
    pub ell_floor: f64,
    /// On grids, cells with `ℓ` below this fraction of the current `sup ℓ` are also skipped.
    pub relative_floor: f64,
}

impl Default for AprioriOptions {
    fn default() -> Self {
        Self {
            ell_floor: 1e-6,
            relative_floor: 0.0,
        }
    }
}

/// Audit of the doubling, decay and `ℓ`-evolution bounds along a model flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub doubling_ok: bool,
    /// Times `t ≤ 1/(16K)` where `|Rm| > 2K`.
    pub doubling_violations: Vec<f64>,
    /// Smallest `C` with `|Rm| ≤ C/t` on `(0, τ]`.
    pub decay_constant: f64,
    /// `(t, sup ℓ(·,t))` for `t ≤ τ`.
    pub ell_series: Vec<(f64, f64)>,
    pub ell0: f64,
    /// `max ℓ(t)/ℓ(0)` when `ℓ(0) > 0`.
    pub c4: Option<f64>,
    /// Smallest `C` with `∂ℓ/∂t ≤ Δℓ + scal·ℓ + Cℓ²` at the audited samples (`Δℓ` only on grids).
    pub evolution_c: Option<f64>,
    pub evolution_samples: usize,
    /// `max |Δ sup ℓ|/Δt` between consecutive samples.
    pub ell_lipschitz: f64,
}

/// Runs the audit with default thresholds.
pub fn verify_apriori_bounds(
    flow: &FlowRecord,
    cone: &ConeSpec,
    k: f64,
    tau: f64,
) -> Result<AprioriReport> {
    verify_apriori_bounds_with(flow, cone, k, tau, AprioriOptions::default())
}

pub fn verify_apriori_bounds_with(
    flow: &FlowRecord,
    cone: &ConeSpec,
    k: f64,
    tau: f64,
    opts: AprioriOptions,
) -> Result<AprioriReport> {
    let times = flow.times();
    let fields = flow.curvature();
    let window = 1.0 / (16.0 * k);
    let mut doubling_violations = Vec::new();
    let mut decay = 0.0_f64;
    let mut ells = Vec::with_capacity(times.len());
    for (t, f) in times.iter().zip(fields) {
        let norm = f.sup_norm();
        if *t <= window && norm > 2.0 * k * (1.0 + 1e-12) {
            doubling_violations.push(*t);
        }
        if *t > 0.0 && *t <= tau {
            decay = decay.max(t * norm);
        }
        ells.push(f.ell_values(cone)?);
    }
    let sup: Vec<f64> = ells
        .iter()
        .map(|e| e.iter().copied().fold(0.0, f64::max))
        .collect();
    let ell_series: Vec<(f64, f64)> = times
        .iter()
        .zip(&sup)
        .filter(|(t, _)| **t <= tau)
        .map(|(t, l)| (*t, *l))
        .collect();
    let ell0 = sup.first().copied().unwrap_or(0.0);
    let c4 = (ell0 > 0.0).then(|| ell_series.iter().map(|(_, l)| l / ell0).fold(0.0, f64::max));

    let mut evolution: Option<f64> = None;
    let mut samples = 0;
    let mut lipschitz = 0.0_f64;
    for i in 0..times.len().saturating_sub(1) {
        let dt = times[i + 1] - times[i];
        lipschitz = lipschitz.max((sup[i + 1] - sup[i]).abs() / dt);
        if times[i + 1] > tau {
            continue;
        }
        let scal = fields[i].scalar_values();
        let floor = opts.ell_floor.max(opts.relative_floor * sup[i]);
        let lap = match (&fields[i], &flow.states()[i]) {
            (CurvatureField::Gauss { .. }, FlowState::Surface(s)) => {
                Some(laplacian_apply(&ells[i], &s.manifold())?)
            }
            _ => None,
        };
        for p in 0..ells[i].len() {
            let l = ells[i][p];
            if l <= floor {
                continue;
            }
            let rate = (ells[i + 1][p] - l) / dt;
            let diffusion = lap.as_ref().map_or(0.0, |v| v[p]);
            let c = (rate - diffusion - scal[p] * l) / (l * l);
            evolution = Some(evolution.map_or(c, |e: f64| e.max(c)));
            samples += 1;
        }
    }
    Ok(AprioriReport {
        doubling_ok: doubling_violations.is_empty(),
        doubling_violations,
        decay_constant: decay,
        ell_series,
        ell0,
        c4,
        evolution_c: evolution.map(|c| c.max(0.0)),
        evolution_samples: samples,
        ell_lipschitz: lipschitz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::ConeKind;
    use crate::flows::MilnorState;

    #[test]
    fn hyperbolic_doubling() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 / 1600.0).collect();
        let rec = FlowRecord::space_form(3, -1.0, &times).unwrap();
        let rep = verify_apriori_bounds(
            &rec,
            &ConeSpec::new(ConeKind::NonnegOperator),
            1.0,
            1.0 / 16.0,
        )
        .unwrap();
        assert!(rep.doubling_ok);
        assert!(rep.ell_series.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn round_sphere_ell_zero() {
        let rec = FlowRecord::homogeneous(&MilnorState::round(), 1e-3, 100, 1).unwrap();
        let rep =
            verify_apriori_bounds(&rec, &ConeSpec::new(ConeKind::TwoNonneg), 1.0, 0.1).unwrap();
        assert_eq!(rep.ell0, 0.0);
        assert!(rep.ell_series.iter().all(|(_, l)| *l == 0.0));
        assert_eq!(rep.evolution_c, None);
    }
}
