use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureOperator;
use crate::error::{Error, Result};

/// Left-invariant metric `A·θ₁² + B·θ₂² + C·θ₃²` on a unimodular 3D group with Milnor frame
/// `[e₂,e₃] = c₁e₁`, `[e₃,e₁] = c₂e₂`, `[e₁,e₂] = c₃e₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilnorState {
    pub t: f64,
    pub g: [f64; 3],
    pub c: [f64; 3],
}

// Products and sums are taken over sorted copies so that permuting the axes permutes
// the results bit for bit.
fn sorted(v: [f64; 3]) -> [f64; 3] {
    let mut s = v;
    s.sort_by(f64::total_cmp);
    s
}

fn sym_prod(v: [f64; 3]) -> f64 {
    let s = sorted(v);
    s[0] * s[1] * s[2]
}

fn sym_sum(v: [f64; 3]) -> f64 {
    let s = sorted(v);
    s[0] + s[1] + s[2]
}

impl MilnorState {
    pub fn new(g: [f64; 3], c: [f64; 3]) -> Result<Self> {
        if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "metric coefficients must be positive, got {g:?}"
            )));
        }
        Ok(Self { t: 0.0, g, c })
    }

    /// Metric on SU(2) = S³ with `A = B = C = 1` the unit round sphere.
    pub fn su2(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new([a, b, c], [2.0, 2.0, 2.0])
    }

    pub fn round() -> Self {
        Self {
            t: 0.0,
            g: [1.0; 3],
            c: [2.0; 3],
        }
    }

    /// Berger sphere `(a, 1, 1)`.
    pub fn berger(a: f64) -> Result<Self> {
        Self::su2(a, 1.0, 1.0)
    }

    /// Principal Ricci curvatures `Ric(f_i, f_i)` in the orthonormal frame `f_i = e_i/√g_i`.
    pub fn ricci(&self) -> [f64; 3] {
        ricci_of(self.g, self.c)
    }

    /// Sectional curvatures `(K₁₂, K₁₃, K₂₃)`.
    pub fn sectional(&self) -> [f64; 3] {
        let r = self.ricci();
        [
            0.5 * (r[0] + r[1] - r[2]),
            0.5 * (r[0] + r[2] - r[1]),
            0.5 * (r[1] + r[2] - r[0]),
        ]
    }

    /// The curvature operator, diagonal in the basis `(f₁∧f₂, f₁∧f₃, f₂∧f₃)`.
    pub fn curvature_operator(&self) -> CurvatureOperator {
        CurvatureOperator::diagonal(3, &self.sectional()).expect("three bivectors")
    }

    pub fn scalar_curvature(&self) -> f64 {
        sym_sum(self.ricci())
    }

    /// Axes permuted by `p`: the new axis `i` is the old axis `p[i]`.
    pub fn permuted(&self, p: [usize; 3]) -> Self {
        Self {
            t: self.t,
            g: [self.g[p[0]], self.g[p[1]], self.g[p[2]]],
            c: [self.c[p[0]], self.c[p[1]], self.c[p[2]]],
        }
    }
}

fn ricci_of(g: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let vol = sym_prod(g).sqrt();
    let lam = [c[0] * g[0] / vol, c[1] * g[1] / vol, c[2] * g[2] / vol];
    let half = 0.5 * sym_sum(lam);
    let mu = [half - lam[0], half - lam[1], half - lam[2]];
    [
        2.0 * mu[1] * mu[2],
        2.0 * mu[0] * mu[2],
        2.0 * mu[0] * mu[1],
    ]
}

fn rate(g: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let r = ricci_of(g, c);
    [-2.0 * g[0] * r[0], -2.0 * g[1] * r[1], -2.0 * g[2] * r[2]]
}

fn offset(g: [f64; 3], k: [f64; 3], s: f64) -> [f64; 3] {
    [g[0] + s * k[0], g[1] + s * k[1], g[2] + s * k[2]]
}

/// One classical RK4 step of `dg_i/dt = −2g_i·Ric_i`.
///
/// Returns a singular-time error (with the current time) when a stage leaves the positive cone.
pub fn step_homogeneous_flow(state: &MilnorState, dt: f64) -> Result<MilnorState> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidInput(format!("time step {dt} is negative")));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let c = state.c;
    let positive = |g: [f64; 3]| g.iter().all(|v| *v > 0.0 && v.is_finite());
    let singular = |g: [f64; 3]| Error::SingularTime {
        t: state.t,
        scale: g.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let k1 = rate(state.g, c);
    let g2 = offset(state.g, k1, 0.5 * dt);
    if !positive(g2) {
        return Err(singular(g2));
    }
    let k2 = rate(g2, c);
    let g3 = offset(state.g, k2, 0.5 * dt);
    if !positive(g3) {
        return Err(singular(g3));
    }
    let k3 = rate(g3, c);
    let g4 = offset(state.g, k3, dt);
    if !positive(g4) {
        return Err(singular(g4));
    }
    let k4 = rate(g4, c);
    let mut g = [0.0; 3];
    for i in 0..3 {
        g[i] = state.g[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if !positive(g) {
        return Err(singular(g));
    }
    Ok(MilnorState {
        t: state.t + dt,
        g,
        c,
    })
}

/// `steps` RK4 steps of size `dt`.
pub fn integrate_homogeneous(state: &MilnorState, dt: f64, steps: usize) -> Result<MilnorState> {
    let mut s = *state;
    for _ in 0..steps {
        s = step_homogeneous_flow(&s, dt)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sphere_curvature_is_identity() {
        let rm = MilnorState::round().curvature_operator();
        assert_eq!(
            rm.matrix(),
            CurvatureOperator::identity(3).unwrap().matrix()
        );
    }

    #[test]
    fn berger_spectrum() {
        let s = MilnorState::berger(2.1).unwrap();
        let ev = s.curvature_operator().eigenvalues();
        assert!((ev[0] - (4.0 - 3.0 * 2.1)).abs() < 1e-12);
        assert!((ev[1] - 2.1).abs() < 1e-12 && (ev[2] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn zero_step_is_identity() {
        let s = MilnorState::su2(1.3, 0.7, 2.0).unwrap();
        assert_eq!(step_homogeneous_flow(&s, 0.0).unwrap(), s);
    }

    #[test]
    fn singular_time_reported() {
        let s = MilnorState::round();
        let err = integrate_homogeneous(&s, 0.01, 30).unwrap_err();
        assert!(matches!(err, Error::SingularTime { .. }));
    }
}
