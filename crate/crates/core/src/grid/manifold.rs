use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_record, format_sig17, mask_runs};

/// Periodic `m×m` grid on the unit torus with a conformal factor and an active mask.
///
/// The metric on cell `c` is `φ_c·g_flat`, so the cell volume is `φ_c·h²`.
/// Cells outside the mask are excluded from integrals, stencils and paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteManifold {
    m: usize,
    h: f64,
    phi: Vec<f64>,
    mask: Vec<bool>,
}

fn check_factor(phi: &[f64]) -> Result<()> {
    match phi.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(c) => Err(Error::InvalidInput(format!(
            "conformal factor at cell {c} is {}",
            phi[c]
        ))),
        None => Ok(()),
    }
}

impl DiscreteManifold {
    /// Flat unit torus with `m×m` cells.
    pub fn flat(m: usize) -> Result<Self> {
        Self::with_factor(m, vec![1.0; m * m])
    }

    /// Metric `e^u·g_flat`.
    pub fn conformal(m: usize, u: &[f64]) -> Result<Self> {
        Self::with_factor(m, u.iter().map(|v| v.exp()).collect())
    }

    /// Metric `φ·g_flat` for a positive cell field `φ`.
    pub fn with_factor(m: usize, phi: Vec<f64>) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidDimension {
                dim: m,
                reason: "grid needs at least 3 cells per side",
            });
        }
        if phi.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: phi.len(),
            });
        }
        check_factor(&phi)?;
        Ok(Self {
            m,
            h: 1.0 / m as f64,
            phi,
            mask: vec![true; m * m],
        })
    }

    /// Replaces the active mask.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.phi.len() {
            return Err(Error::DimensionMismatch {
                expected: self.phi.len(),
                got: mask.len(),
            });
        }
        if !mask.iter().any(|a| *a) {
            return Err(Error::InvalidInput("active mask is empty".into()));
        }
        self.mask = mask;
        Ok(self)
    }

    /// Same grid with the mask intersected with `cells`.
    pub fn restricted(&self, cells: &[usize]) -> Result<Self> {
        let mut mask = vec![false; self.len()];
        for &c in cells {
            if c < mask.len() && self.mask[c] {
                mask[c] = true;
            }
        }
        self.clone().with_mask(mask)
    }

    /// Same mask and grid with a new conformal factor.
    pub fn with_new_factor(&self, phi: Vec<f64>) -> Result<Self> {
        let man = Self::with_factor(self.m, phi)?;
        man.with_mask(self.mask.clone())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn factor(&self) -> &[f64] {
        &self.phi
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_active(&self, c: usize) -> bool {
        self.mask.get(c).copied().unwrap_or(false)
    }

    pub fn active_cells(&self) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.mask[c]).collect()
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|a| **a).count()
    }

    /// Cell index of lattice position `(i, j)`, wrapped periodically.
    pub fn index(&self, i: i64, j: i64) -> usize {
        let m = self.m as i64;
        (j.rem_euclid(m) * m + i.rem_euclid(m)) as usize
    }

    pub fn coords(&self, c: usize) -> (usize, usize) {
        (c % self.m, c / self.m)
    }

    /// Cell centre in `[0,1)²`.
    pub fn center(&self, c: usize) -> (f64, f64) {
        let (i, j) = self.coords(c);
        ((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    /// Cell nearest to the point `(x, y)` of the torus.
    pub fn cell_at(&self, x: f64, y: f64) -> usize {
        let i = (x * self.m as f64).floor() as i64;
        let j = (y * self.m as f64).floor() as i64;
        self.index(i, j)
    }

    /// The four lattice neighbours (+x, −x, +y, −y).
    pub fn neighbours(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.coords(c);
        let (i, j) = (i as i64, j as i64);
        [
            self.index(i + 1, j),
            self.index(i - 1, j),
            self.index(i, j + 1),
            self.index(i, j - 1),
        ]
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.phi[c] * self.h * self.h
    }

    /// Volume weights, zero on inactive cells.
    pub fn volumes(&self) -> Vec<f64> {
        (0..self.len())
            .map(|c| {
                if self.mask[c] {
                    self.cell_volume(c)
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes().iter().sum()
    }

    /// Active cells with at least one inactive lattice neighbour.
    pub fn boundary_cells(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&c| self.mask[c] && self.neighbours(c).iter().any(|&nb| !self.mask[nb]))
            .collect()
    }

    /// JSON sidecar: grid size, spacing and run-length encoded mask.
    pub fn sidecar(&self) -> serde_json::Value {
        let runs: Vec<(u8, usize)> = mask_runs(&self.mask)
            .into_iter()
            .map(|(a, n)| (a as u8, n))
            .collect();
        serde_json::json!({ "m": self.m, "h": self.h, "mask_runs": runs })
    }

    /// Row-major CSV of a cell field, one grid row per line.
    pub fn field_csv(&self, f: &[f64]) -> String {
        f.chunks(self.m)
            .map(|row| csv_record(&row.iter().map(|v| format_sig17(*v)).collect::<Vec<_>>()))
            .collect()
    }
}

fn check_len(f: &[f64], man: &DiscreteManifold) -> Result<()> {
    if f.len() != man.len() {
        return Err(Error::DimensionMismatch {
            expected: man.len(),
            got: f.len(),
        });
    }
    Ok(())
}

/// Flat five-point Laplacian `Δ₀f` with reflecting (Neumann) treatment of the mask.
///
/// Inactive cells get 0.
pub fn flat_laplacian(f: &[f64], man: &DiscreteManifold) -> Result<Vec<f64>> {
    check_len(f, man)?;
    let inv_h2 = 1.0 / (man.h * man.h);
    Ok((0..man.len())
        .map(|c| {
            if !man.mask[c] {
                return 0.0;
            }
            let s: f64 = man
                .neighbours(c)
                .iter()
                .filter(|&&nb| man.mask[nb])
                .map(|&nb| f[nb] - f[c])
                .sum();
            s * inv_h2
        })
        .collect())
}

/// Laplace–Beltrami operator of the conformal metric, `Δf = φ⁻¹Δ₀f`.
///
/// Symmetric for the volume-weighted inner product. Inactive cells get 0.
pub fn laplacian_apply(f: &[f64], man: &DiscreteManifold) -> Result<Vec<f64>> {
    let mut out = flat_laplacian(f, man)?;
    for (v, p) in out.iter_mut().zip(&man.phi) {
        *v /= p;
    }
    Ok(out)
}

/// `Δf` at a single active cell.
pub fn laplacian_at(f: &[f64], man: &DiscreteManifold, c: usize) -> Result<f64> {
    check_len(f, man)?;
    if !man.is_active(c) {
        return Err(Error::MaskedDomain(c));
    }
    let s: f64 = man
        .neighbours(c)
        .iter()
        .filter(|&&nb| man.mask[nb])
        .map(|&nb| f[nb] - f[c])
        .sum();
    Ok(s / (man.h * man.h * man.phi[c]))
}

/// `Σ f·vol` over the active cells of `region`.
pub fn integrate(f: &[f64], man: &DiscreteManifold, region: &[usize]) -> Result<f64> {
    check_len(f, man)?;
    Ok(region
        .iter()
        .filter(|&&c| man.is_active(c))
        .map(|&c| f[c] * man.cell_volume(c))
        .sum())
}

/// `Σ f·vol` over all active cells.
pub fn integrate_active(f: &[f64], man: &DiscreteManifold) -> Result<f64> {
    check_len(f, man)?;
    Ok((0..man.len())
        .filter(|&c| man.mask[c])
        .map(|c| f[c] * man.cell_volume(c))
        .sum())
}

/// Forward-difference gradient norm `|∇f|_g = φ^{-1/2}|∇₀f|`.
///
/// Differences across an inactive neighbour are dropped. Inactive cells get 0.
pub fn gradient_norm(f: &[f64], man: &DiscreteManifold) -> Result<Vec<f64>> {
    check_len(f, man)?;
    Ok((0..man.len())
        .map(|c| {
            if !man.mask[c] {
                return 0.0;
            }
            let nb = man.neighbours(c);
            let dx = if man.mask[nb[0]] {
                f[nb[0]] - f[c]
            } else {
                0.0
            };
            let dy = if man.mask[nb[2]] {
                f[nb[2]] - f[c]
            } else {
                0.0
            };
            (dx * dx + dy * dy).sqrt() / (man.h * man.phi[c].sqrt())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_zero_laplacian() {
        let u: Vec<f64> = (0..100).map(|c| (c as f64 * 0.37).sin() * 0.3).collect();
        let man = DiscreteManifold::conformal(10, &u).unwrap();
        let lap = laplacian_apply(&vec![2.5; 100], &man).unwrap();
        assert!(lap.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sine_eigenfunction() {
        let mut errs = Vec::new();
        for m in [32, 64] {
            let man = DiscreteManifold::flat(m).unwrap();
            let f: Vec<f64> = (0..m * m)
                .map(|c| (2.0 * PI * man.center(c).0).sin())
                .collect();
            let lap = laplacian_apply(&f, &man).unwrap();
            let err = f
                .iter()
                .zip(&lap)
                .map(|(a, b)| (b + 4.0 * PI * PI * a).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let slope = (errs[0] / errs[1]).log2();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn unit_area() {
        let man = DiscreteManifold::flat(17).unwrap();
        let one = vec![1.0; man.len()];
        assert!((integrate_active(&one, &man).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_at_rejects_inactive() {
        let mut mask = vec![true; 25];
        mask[3] = false;
        let man = DiscreteManifold::flat(5).unwrap().with_mask(mask).unwrap();
        assert_eq!(
            laplacian_at(&vec![0.0; 25], &man, 3),
            Err(Error::MaskedDomain(3))
        );
        assert!(laplacian_at(&vec![0.0; 25], &man, 4).is_ok());
    }

    #[test]
    fn rejects_nonpositive_factor() {
        let mut phi = vec![1.0; 9];
        phi[4] = 0.0;
        assert!(DiscreteManifold::with_factor(3, phi).is_err());
        assert!(DiscreteManifold::flat(5)
            .unwrap()
            .with_mask(vec![false; 25])
            .is_err());
    }
}
