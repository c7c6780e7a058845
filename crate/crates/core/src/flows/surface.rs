use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{flat_laplacian, DiscreteManifold};
use crate::tolerances::SURFACE_CFL;

/// Time integrator of the conformal surface flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SurfaceScheme {
    #[default]
    Euler,
    Rk2,
}

/// Metric `e^u·g_flat` on an `m×m` torus grid, with an active mask, at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalSurface {
    pub t: f64,
    m: usize,
    u: Vec<f64>,
    mask: Vec<bool>,
}

impl ConformalSurface {
    pub fn new(m: usize, u: Vec<f64>) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidDimension {
                dim: m,
                reason: "grid needs at least 3 cells per side",
            });
        }
        if u.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: u.len(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "conformal exponent must be finite".into(),
            ));
        }
        Ok(Self {
            t: 0.0,
            m,
            u,
            mask: vec![true; m * m],
        })
    }

    pub fn flat(m: usize) -> Result<Self> {
        Self::new(m, vec![0.0; m * m])
    }

    /// Conformal exponent from a function of the cell centre.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(m: usize, f: F) -> Result<Self> {
        let h = 1.0 / m as f64;
        let u = (0..m * m)
            .map(|c| f(((c % m) as f64 + 0.5) * h, ((c / m) as f64 + 0.5) * h))
            .collect();
        Self::new(m, u)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.u.len() {
            return Err(Error::DimensionMismatch {
                expected: self.u.len(),
                got: mask.len(),
            });
        }
        if !mask.iter().any(|a| *a) {
            return Err(Error::InvalidInput("active mask is empty".into()));
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn manifold(&self) -> DiscreteManifold {
        DiscreteManifold::conformal(self.m, &self.u)
            .and_then(|man| man.with_mask(self.mask.clone()))
            .expect("surface state is validated on construction")
    }

    /// Gauss curvature `K = −½e^{−u}Δ₀u` on active cells, 0 elsewhere.
    pub fn gauss_curvature(&self) -> Vec<f64> {
        let lap = flat_laplacian(&self.u, &self.manifold()).expect("matching sizes");
        lap.iter()
            .zip(&self.u)
            .map(|(l, u)| -0.5 * (-u).exp() * l)
            .collect()
    }

    /// Largest explicit step, `0.2·h²·min e^u` over active cells.
    pub fn dt_bound(&self) -> f64 {
        let min_u = (0..self.u.len())
            .filter(|&c| self.mask[c])
            .map(|c| self.u[c])
            .fold(f64::INFINITY, f64::min);
        SURFACE_CFL * self.h() * self.h() * min_u.exp()
    }

    /// `∫e^u` over active cells.
    pub fn area(&self) -> f64 {
        let h2 = self.h() * self.h();
        (0..self.u.len())
            .filter(|&c| self.mask[c])
            .map(|c| self.u[c].exp() * h2)
            .sum()
    }

    /// `∂u/∂t = e^{−u}Δ₀u`.
    pub fn velocity(&self) -> Vec<f64> {
        velocity(&self.u, &self.manifold())
    }
}

fn velocity(u: &[f64], man: &DiscreteManifold) -> Vec<f64> {
    let lap = flat_laplacian(u, man).expect("matching sizes");
    lap.iter().zip(u).map(|(l, v)| (-v).exp() * l).collect()
}

/// One explicit step of `∂u/∂t = e^{−u}Δ₀u`.
pub fn step_conformal_surface_flow(
    s: &ConformalSurface,
    dt: f64,
    scheme: SurfaceScheme,
) -> Result<ConformalSurface> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidInput(format!("time step {dt} is negative")));
    }
    let bound = s.dt_bound();
    if dt > bound {
        return Err(Error::StepRejected { dt, bound });
    }
    let man = s.manifold();
    let k1 = velocity(&s.u, &man);
    let u = match scheme {
        SurfaceScheme::Euler => s.u.iter().zip(&k1).map(|(u, k)| u + dt * k).collect(),
        SurfaceScheme::Rk2 => {
            let mid: Vec<f64> = s.u.iter().zip(&k1).map(|(u, k)| u + 0.5 * dt * k).collect();
            let k2 = velocity(&mid, &man);
            s.u.iter().zip(&k2).map(|(u, k)| u + dt * k).collect()
        }
    };
    Ok(ConformalSurface {
        t: s.t + dt,
        m: s.m,
        u,
        mask: s.mask.clone(),
    })
}

/// Surfaces at each of the increasing `times`, stepping at half the stability bound and landing
/// exactly on every requested time.
pub fn sample_surface_flow(
    initial: &ConformalSurface,
    times: &[f64],
    scheme: SurfaceScheme,
) -> Result<Vec<ConformalSurface>> {
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|t| *t < initial.t) {
        return Err(Error::InvalidInput(
            "sample times must increase from the initial time".into(),
        ));
    }
    let mut cur = initial.clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while cur.t < t {
            let dt = (0.5 * cur.dt_bound()).min(t - cur.t);
            let next = step_conformal_surface_flow(&cur, dt, scheme)?;
            cur = if t - next.t <= 1e-15 * t {
                next.at_time(t)
            } else {
                next
            };
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Flows for `steps` steps of size `dt`.
pub fn integrate_surface(
    s: &ConformalSurface,
    dt: f64,
    steps: usize,
    scheme: SurfaceScheme,
) -> Result<ConformalSurface> {
    let mut cur = s.clone();
    for _ in 0..steps {
        cur = step_conformal_surface_flow(&cur, dt, scheme)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_stationary() {
        let s = ConformalSurface::new(8, vec![0.3; 64]).unwrap();
        let next = step_conformal_surface_flow(&s, s.dt_bound(), SurfaceScheme::Euler).unwrap();
        assert_eq!(next.u(), s.u());
        assert!(next.gauss_curvature().iter().all(|k| *k == 0.0));
    }

    #[test]
    fn rejects_unstable_step() {
        let s = ConformalSurface::flat(16).unwrap();
        let dt = 2.0 * s.dt_bound();
        assert!(matches!(
            step_conformal_surface_flow(&s, dt, SurfaceScheme::Euler),
            Err(Error::StepRejected { .. })
        ));
    }

    #[test]
    fn sinusoid_decays() {
        let s = ConformalSurface::from_fn(32, |x, y| {
            0.05 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
        })
        .unwrap();
        let dt = s.dt_bound();
        let mut cur = s.clone();
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            cur = integrate_surface(&cur, dt, 10, SurfaceScheme::Rk2).unwrap();
            let mean = cur.u().iter().sum::<f64>() / cur.u().len() as f64;
            let dev = cur.u().iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            assert!(dev <= last);
            last = dev;
        }
        assert!((cur.area() - s.area()).abs() < 1e-6);
    }
}
