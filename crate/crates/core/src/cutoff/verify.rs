use serde::{Deserialize, Serialize};

use super::build::CutoffField;
use super::profile::{plateau_d1, plateau_d2, profile_bound, ramp_d1, ramp_d2};
use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::grid::{
    distances_from, distances_within, gradient_norm, laplacian_apply, DiscreteManifold, Stencil,
};

/// Measured derivative bounds and audits of a cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub width: f64,
    pub centers: usize,
    /// Volume-comparison bound on the number of centres: `Vol B(x₀,R) / min_k Vol B(p_k, ε/2)`.
    pub center_bound: f64,
    pub sup_gradient: f64,
    pub sup_laplacian: f64,
    pub sup_time_derivative: f64,
    /// Proof-chain envelopes of the three derivatives, built from `center_bound`.
    pub envelope_gradient: f64,
    pub envelope_laplacian: f64,
    pub envelope_time_derivative: f64,
    pub range_ok: bool,
    /// Derivatives vanish away from the collar `R − r ≤ d₀ < R`.
    pub support_ok: bool,
    /// `B_{g(s)}(x₀, R − 5r/4) ⊆ B_{g(0)}(x₀, R − r) ⊆ {φ(·,s) = 1}` at every snapshot.
    pub inclusion_ok: bool,
    /// Cells where the discrete `Δφ` exceeds the pointwise comparison envelope.
    pub kink_cells: usize,
    /// Fraction of collar samples where `Δd_k ≤ (n−1)√K·coth(√K·d_k)`.
    pub comparison_fraction: f64,
}

/// Fitted `r`-exponents of the measured sups and of the envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffExponents {
    pub gradient: f64,
    pub laplacian: f64,
    pub time_derivative: f64,
    pub envelope_gradient: f64,
    pub envelope_laplacian: f64,
    pub envelope_time_derivative: f64,
    /// `(−(n+1), −(2n+2), −n)`.
    pub target: (f64, f64, f64),
}

fn local_change(f: &[f64], man: &DiscreteManifold, c: usize) -> bool {
    man.neighbours(c)
        .iter()
        .any(|&nb| man.is_active(nb) && f[nb] != f[c])
}

/// Measures the cutoff's derivatives and audits its range, support and inclusions.
pub fn verify_cutoff(
    cf: &CutoffField,
    snapshots: &[(f64, DiscreteManifold)],
) -> Result<CutoffReport> {
    if snapshots.len() != cf.phi.len() {
        return Err(Error::DimensionMismatch {
            expected: cf.phi.len(),
            got: snapshots.len(),
        });
    }
    let p = cf.params;
    let (rr, r) = (p.radius, p.width);
    let n = 2.0;
    let c0 = profile_bound();
    let man0 = &snapshots[0].1;
    let in_collar = |c: usize| cf.d0[c] >= rr - r && cf.d0[c] < rr;
    let near_collar = |man: &DiscreteManifold, c: usize| {
        in_collar(c) || man.neighbours(c).iter().any(|&nb| in_collar(nb))
    };

    let mut sup_grad = 0.0_f64;
    let mut sup_lap = f64::NEG_INFINITY;
    let mut sup_ds = 0.0_f64;
    let mut range_ok = true;
    let mut support_ok = true;
    let mut inclusion_ok = true;
    let mut kinks = 0;
    let mut comp_total = 0usize;
    let mut comp_ok = 0usize;
    let sk = p.k.sqrt();
    for (idx, (t, man)) in snapshots.iter().enumerate() {
        let phi = &cf.phi[idx];
        range_ok &= phi.iter().all(|v| (0.0..=1.0).contains(v));
        let grad = gradient_norm(phi, man)?;
        let lap = laplacian_apply(phi, man)?;
        let ds = distances_from(man, cf.x0, Stencil::default())?;
        // Pointwise comparison envelope of Δφ from the centre distances.
        let mut g_sum = vec![0.0; man.len()];
        let mut h_sum = vec![0.0; man.len()];
        let mut s_sum = vec![0.0; man.len()];
        for &pk in &cf.centers {
            let dk = distances_within(man, &[(pk, 0.0)], Stencil::default(), 0.5 * r);
            let lap_d = laplacian_apply(
                &dk.iter()
                    .map(|d| if d.is_finite() { *d } else { 0.5 * r })
                    .collect::<Vec<_>>(),
                man,
            )?;
            for c in 0..man.len() {
                let d = dk[c];
                if !d.is_finite() || d <= 0.25 * r || d >= 0.5 * r {
                    continue;
                }
                let z = d / r;
                let comparison = (n - 1.0) * sk / (sk * d).tanh();
                g_sum[c] += plateau_d1(z).abs() / r;
                h_sum[c] += plateau_d2(z).abs() / (r * r) + plateau_d1(z).abs() / r * comparison;
                s_sum[c] += plateau_d1(z);
                if man.neighbours(c).iter().all(|&nb| dk[nb].is_finite()) {
                    comp_total += 1;
                    if lap_d[c] <= comparison {
                        comp_ok += 1;
                    }
                }
            }
        }
        for c in 0..man.len() {
            if !man.is_active(c) {
                continue;
            }
            sup_grad = sup_grad.max(grad[c]);
            sup_lap = sup_lap.max(lap[c]);
            if (grad[c] != 0.0 || lap[c] != 0.0 || local_change(phi, man, c))
                && !near_collar(man, c)
            {
                support_ok = false;
            }
            let z = 1.0 - s_sum[c].abs().min(1.0);
            let envelope = ramp_d2(z) * g_sum[c] * g_sum[c] + ramp_d1(z) * h_sum[c];
            if lap[c] > 1.1 * envelope + 1e-9 && lap[c] > 0.0 {
                kinks += 1;
            }
            let inner0 = cf.d0[c] < rr - r;
            if inner0 && phi[c] != 1.0 {
                inclusion_ok = false;
            }
            if ds[c] < rr - 1.25 * r && !inner0 {
                inclusion_ok = false;
            }
        }
        if idx + 1 < snapshots.len() {
            let dt = snapshots[idx + 1].0 - t;
            let next = &cf.phi[idx + 1];
            for c in 0..man.len() {
                let rate = (next[c] - phi[c]) / dt;
                sup_ds = sup_ds.max(rate);
                if rate != 0.0 && !near_collar(man, c) {
                    support_ok = false;
                }
            }
        }
    }
    let ball_vol: f64 = (0..man0.len())
        .filter(|&c| cf.d0[c] < rr)
        .map(|c| man0.cell_volume(c))
        .sum();
    let min_small = cf
        .centers
        .iter()
        .map(|&pk| {
            let d = distances_within(man0, &[(pk, 0.0)], Stencil::default(), 0.5 * cf.eps);
            (0..man0.len())
                .filter(|&c| d[c] <= 0.5 * cf.eps)
                .map(|c| man0.cell_volume(c))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let center_bound = if cf.centers.is_empty() {
        0.0
    } else {
        ball_vol / min_small
    };
    let comparison_max = (n - 1.0) * sk / (sk * 0.25 * r).tanh();
    let envelope_gradient = c0 * c0 * center_bound / r;
    let envelope_laplacian = c0 * (c0 * center_bound / r).powi(2)
        + c0 * center_bound * (c0 / (r * r) + c0 / r * comparison_max);
    let envelope_time_derivative = c0 * center_bound * c0 / r * (0.5 * p.k * r);
    Ok(CutoffReport {
        width: r,
        centers: cf.centers.len(),
        center_bound,
        sup_gradient: sup_grad,
        sup_laplacian: sup_lap.max(0.0),
        sup_time_derivative: sup_ds,
        envelope_gradient,
        envelope_laplacian,
        envelope_time_derivative,
        range_ok,
        support_ok,
        inclusion_ok,
        kink_cells: kinks,
        comparison_fraction: if comp_total == 0 {
            1.0
        } else {
            comp_ok as f64 / comp_total as f64
        },
    })
}

/// Log-log slopes against `r` over a sweep of reports (`n = 2`).
pub fn fit_cutoff_exponents(reports: &[CutoffReport]) -> CutoffExponents {
    let rs: Vec<f64> = reports.iter().map(|r| r.width).collect();
    let slope = |f: fn(&CutoffReport) -> f64| {
        log_log_slope(&rs, &reports.iter().map(f).collect::<Vec<_>>())
    };
    CutoffExponents {
        gradient: slope(|r| r.sup_gradient),
        laplacian: slope(|r| r.sup_laplacian),
        time_derivative: slope(|r| r.sup_time_derivative),
        envelope_gradient: slope(|r| r.envelope_gradient),
        envelope_laplacian: slope(|r| r.envelope_laplacian),
        envelope_time_derivative: slope(|r| r.envelope_time_derivative),
        target: (-3.0, -6.0, -2.0),
    }
}
