//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricci_core::curvature::CurvatureOperator;
use ricci_core::flows::{ConformalSurface, SurfaceScheme};
use ricci_core::heat::{ExpansionFlow, Stage};

/// Seeded random curvature operators of dimension `n`.
pub fn operators(n: usize, count: usize, seed: u64) -> Vec<CurvatureOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| CurvatureOperator::random(n, &mut rng).expect("n ≥ 2"))
        .collect()
}

pub fn torus_bump(m: usize) -> ConformalSurface {
    ConformalSurface::from_fn(m, |x, y| 0.3 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
        .expect("positive grid")
}

/// One stage of the evolving torus on `[0, 2e-3]` with `steps` kernel steps.
pub fn evolving_flow(m: usize, steps: usize) -> ExpansionFlow {
    let s = torus_bump(m);
    let dt = 2e-3 / steps as f64;
    let sub = (dt / (0.5 * s.dt_bound())).ceil() as usize;
    let (stage, _) =
        Stage::from_surface_flow(&s, 2e-3, steps, sub, SurfaceScheme::Rk2).expect("stable steps");
    ExpansionFlow::single(stage)
}
