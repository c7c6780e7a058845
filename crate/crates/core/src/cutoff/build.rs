use serde::{Deserialize, Serialize};

use super::profile::{plateau, ramp};
use super::separated::maximal_separated_set;
use crate::error::{Error, Result};
use crate::grid::{distances_from, distances_within, DiscreteManifold, Stencil};

/// Parameters of the cutoff: outer radius `R`, collar width `r`, Ricci lower bound `K`, decay
/// constant `c₀` and distance-distortion constant `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub radius: f64,
    pub width: f64,
    pub k: f64,
    pub c0: f64,
    pub beta: f64,
}

/// Space-time cutoff `φ(y, s)` on the snapshot times of a surface flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffField {
    pub params: CutoffParams,
    pub x0: usize,
    pub times: Vec<f64>,
    /// `φ(·, s)` per snapshot.
    pub phi: Vec<Vec<f64>>,
    /// Separated points `p_k` of the collar annulus.
    pub centers: Vec<usize>,
    /// Separation `r/(4e^K)`.
    pub eps: f64,
    /// `d_{g(0)}(x₀, ·)`.
    pub d0: Vec<f64>,
}

/// Builds `φ = F(1 − Σ f(d_{g(s)}(p_k, ·)/r))` inside `B_{g(0)}(x₀, R)`, 0 outside.
///
/// `snapshots[0]` must be the metric at time 0.
pub fn build_cutoff(
    snapshots: &[(f64, DiscreteManifold)],
    x0: usize,
    params: CutoffParams,
) -> Result<CutoffField> {
    let (rr, r) = (params.radius, params.width);
    if snapshots.is_empty() || !(r > 0.0) || !(rr > r) {
        return Err(Error::InvalidInput(
            "cutoff needs snapshots and 0 < r < R".into(),
        ));
    }
    let t_max = snapshots.iter().map(|(t, _)| *t).fold(0.0, f64::max);
    let shift = params.beta * (params.c0 * t_max).sqrt();
    if shift > 0.25 * r {
        return Err(Error::Hypothesis(format!(
            "β√(c₀T) = {shift:.4e} exceeds r/4 = {:.4e}",
            0.25 * r
        )));
    }
    let man0 = &snapshots[0].1;
    let d0 = distances_from(man0, x0, Stencil::default())?;
    if man0.boundary_cells().iter().any(|&c| d0[c] < rr + r) {
        return Err(Error::Hypothesis(format!(
            "B(x₀, R + r) with R + r = {} reaches the domain boundary",
            rr + r
        )));
    }
    let annulus: Vec<usize> = (0..man0.len())
        .filter(|&c| d0[c] < rr && d0[c] >= rr - 0.25 * r)
        .collect();
    let eps = r / (4.0 * params.k.exp());
    let centers = maximal_separated_set(man0, &annulus, eps);
    let reach0: Vec<Vec<bool>> = centers
        .iter()
        .map(|&p| {
            distances_within(man0, &[(p, 0.0)], Stencil::default(), r)
                .iter()
                .map(|d| *d < r)
                .collect()
        })
        .collect();
    let mut phi = Vec::with_capacity(snapshots.len());
    for (_, man) in snapshots {
        let mut sum = vec![0.0; man.len()];
        for (k, &p) in centers.iter().enumerate() {
            let d = distances_within(man, &[(p, 0.0)], Stencil::default(), 0.5 * r);
            for c in 0..man.len() {
                if reach0[k][c] && d[c].is_finite() {
                    sum[c] += plateau(d[c] / r);
                }
            }
        }
        phi.push(
            (0..man.len())
                .map(|c| if d0[c] < rr { ramp(1.0 - sum[c]) } else { 0.0 })
                .collect(),
        );
    }
    Ok(CutoffField {
        params,
        x0,
        times: snapshots.iter().map(|(t, _)| *t).collect(),
        phi,
        centers,
        eps,
        d0,
    })
}
