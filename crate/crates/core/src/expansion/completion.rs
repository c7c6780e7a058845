use serde::{Deserialize, Serialize};

use crate::cutoff::smoothstep;
use crate::error::{Error, Result};
use crate::flows::ConformalSurface;
use crate::grid::{eikonal_distance_to_boundary, DiscreteManifold};

/// Cusp constant `c` of the default completion profile.
pub const CUSP_CONSTANT: f64 = 16.0;

/// Conformal completion profile: `η(s) = 1` for `s ≥ 2`, `η(s) = c/s` for `s ≤ 1/2`, and
/// `ln η = (1 − S((s − 1/2)/(3/2)))·ln(c/s)` in between, with `S` the quintic smoothstep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionProfile {
    pub c: f64,
}

impl Default for CompletionProfile {
    fn default() -> Self {
        Self { c: CUSP_CONSTANT }
    }
}

impl CompletionProfile {
    pub fn eta(&self, s: f64) -> f64 {
        if s >= 2.0 {
            1.0
        } else if s <= 0.5 {
            self.c / s
        } else {
            ((1.0 - smoothstep((s - 0.5) / 1.5)) * (self.c / s).ln()).exp()
        }
    }
}

/// Completed metric `g̃ = w²g` on a region `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub manifold: DiscreteManifold,
    /// Conformal factor `w = η(d_g(·, ∂U)/ρ)`; 1 off `U`.
    pub w: Vec<f64>,
    /// `d_g(·, ∂U)`, infinite off `U`.
    pub dist: Vec<f64>,
    pub rho: f64,
    /// Set when nothing was completed.
    pub notice: Option<String>,
}

impl Completion {
    /// Cells of `U` at distance at least `2ρ` from `∂U`, where `g̃ = g`.
    pub fn interior(&self) -> Vec<bool> {
        self.dist
            .iter()
            .map(|d| d.is_finite() && *d >= 2.0 * self.rho)
            .collect()
    }

    /// Cells at distance at least `2ρ + margin` from `∂U`.
    pub fn inner(&self, margin: f64) -> Vec<bool> {
        self.dist
            .iter()
            .map(|d| d.is_finite() && *d >= 2.0 * self.rho + margin)
            .collect()
    }

    /// Cells of `U` within `2ρ` of `∂U`.
    pub fn collar(&self) -> Vec<bool> {
        self.dist
            .iter()
            .map(|d| d.is_finite() && *d < 2.0 * self.rho)
            .collect()
    }
}

/// Completes `man` on the cell set `region` with the default profile.
pub fn conformal_completion(
    man: &DiscreteManifold,
    region: &[bool],
    rho: f64,
) -> Result<Completion> {
    conformal_completion_with(man, region, rho, CompletionProfile::default())
}

pub fn conformal_completion_with(
    man: &DiscreteManifold,
    region: &[bool],
    rho: f64,
    profile: CompletionProfile,
) -> Result<Completion> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "completion scale ρ = {rho} must lie in (0, 1]"
        )));
    }
    if !(profile.c >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "cusp constant {} must be at least 1",
            profile.c
        )));
    }
    if region.len() != man.len() {
        return Err(Error::DimensionMismatch {
            expected: man.len(),
            got: region.len(),
        });
    }
    if region.iter().zip(man.mask()).any(|(u, a)| *u && !*a) {
        return Err(Error::InvalidInput(
            "completion region leaves the active mask".into(),
        ));
    }
    let sub = man.clone().with_mask(region.to_vec())?;
    if sub.boundary_cells().is_empty() {
        return Ok(Completion {
            manifold: sub,
            w: vec![1.0; man.len()],
            dist: vec![f64::INFINITY; man.len()],
            rho,
            notice: Some("region has no boundary; nothing to complete".into()),
        });
    }
    let dist = eikonal_distance_to_boundary(&sub);
    let w: Vec<f64> = (0..man.len())
        .map(|c| {
            if region[c] {
                profile.eta(dist[c] / rho)
            } else {
                1.0
            }
        })
        .collect();
    let phi: Vec<f64> = man
        .factor()
        .iter()
        .zip(&w)
        .map(|(p, w)| p * w * w)
        .collect();
    let manifold = sub.with_new_factor(phi)?;
    let dist = (0..man.len())
        .map(|c| if region[c] { dist[c] } else { f64::INFINITY })
        .collect();
    Ok(Completion {
        manifold,
        w,
        dist,
        rho,
        notice: None,
    })
}

/// Gauss curvature of a masked manifold, computed through its conformal factor.
pub fn gauss_curvature_of(man: &DiscreteManifold) -> Result<Vec<f64>> {
    let u: Vec<f64> = man.factor().iter().map(|p| p.ln()).collect();
    Ok(ConformalSurface::new(man.m(), u)?
        .with_mask(man.mask().to_vec())?
        .gauss_curvature())
}

/// `max |K_g̃|·ρ²` over the collar of a completion.
pub fn collar_curvature_constant(comp: &Completion) -> Result<f64> {
    let k = gauss_curvature_of(&comp.manifold)?;
    let collar = comp.collar();
    Ok(k.iter()
        .zip(&collar)
        .filter(|(_, c)| **c)
        .map(|(k, _)| k.abs())
        .fold(0.0, f64::max)
        * comp.rho
        * comp.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::geodesic_distance;

    fn disk(man: &DiscreteManifold, radius: f64) -> Vec<bool> {
        (0..man.len())
            .map(|c| {
                let (x, y) = man.center(c);
                (x - 0.5).hypot(y - 0.5) < radius
            })
            .collect()
    }

    #[test]
    fn profile_is_monotone_and_continuous() {
        let p = CompletionProfile::default();
        let mut prev = f64::INFINITY;
        for k in 1..=400 {
            let s = k as f64 * 0.01;
            let e = p.eta(s);
            assert!(e >= 1.0 && e <= prev);
            prev = e;
        }
        assert!((p.eta(0.5 + 1e-9) - 32.0).abs() < 1e-6);
        assert!((p.eta(2.0 - 1e-9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_is_untouched() {
        let man = DiscreteManifold::conformal(64, &vec![0.1; 64 * 64]).unwrap();
        let u = disk(&man, 0.4);
        let comp = conformal_completion(&man, &u, 0.05).unwrap();
        for (c, inside) in comp.interior().iter().enumerate() {
            if *inside {
                assert_eq!(comp.manifold.factor()[c], man.factor()[c]);
            }
            assert!(comp.manifold.factor()[c] >= man.factor()[c]);
        }
    }

    #[test]
    fn full_torus_has_nothing_to_complete() {
        let man = DiscreteManifold::flat(16).unwrap();
        let comp = conformal_completion(&man, &vec![true; 256], 0.1).unwrap();
        assert!(comp.notice.is_some());
        assert_eq!(comp.manifold, man);
    }

    #[test]
    fn boundary_recedes_under_refinement() {
        let mut prev = 0.0;
        for m in [64, 128] {
            let man = DiscreteManifold::flat(m).unwrap();
            let u = disk(&man, 0.45);
            let comp = conformal_completion(&man, &u, 0.1).unwrap();
            let centre = man.cell_at(0.5, 0.5);
            let edge = man.cell_at(0.5 + 0.45 - 0.5 / m as f64, 0.5);
            let base = geodesic_distance(&man.clone().with_mask(u.clone()).unwrap(), centre, edge)
                .unwrap();
            let far = geodesic_distance(&comp.manifold, centre, edge).unwrap();
            assert!(far > 10.0 * base, "m = {m}: {far} vs {base}");
            assert!(far > prev);
            prev = far;
        }
    }
}
