use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geodesic::{distances_from, Stencil};
use super::manifold::DiscreteManifold;
use crate::error::{Error, Result};
use crate::fit::smallest_feasible;

/// Values of `(C₁/t^{n/2})∫_{B(x,R)} exp(−d²/(C₁t))` over a sweep of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallIntegralSweep {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
}

/// Gaussian ball integral on a fixed surface (`n = 2`) for each `t` in `times`.
pub fn gaussian_ball_integral(
    man: &DiscreteManifold,
    x: usize,
    radius: f64,
    c1: f64,
    times: &[f64],
) -> Result<BallIntegralSweep> {
    if !(c1 > 0.0) || times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput(
            "c1 and all times must be positive".into(),
        ));
    }
    let d = distances_from(man, x, Stencil::default())?;
    let values: Vec<f64> = times
        .iter()
        .map(|&t| {
            let s: f64 = (0..man.len())
                .filter(|&c| d[c] <= radius)
                .map(|c| (-d[c] * d[c] / (c1 * t)).exp() * man.cell_volume(c))
                .sum();
            c1 / t * s
        })
        .collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(BallIntegralSweep {
        times: times.to_vec(),
        values,
        max,
    })
}

/// Tail integrals of the Gaussian outside `B(x, t^{1/4}d)` and their fitted decay constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub times: Vec<f64>,
    pub tails: Vec<f64>,
    /// Smallest `C` with `tail(t) ≤ C·exp(−d²/(C√t))` at every sample.
    pub fitted_c: Option<f64>,
    /// Whether `d ≥ 2(n−1)^{3/2}√C₁·C₂`.
    pub threshold_ok: bool,
}

/// Tail check on a sequence of `(t, metric at t)` snapshots of a surface flow.
pub fn gaussian_tail_check(
    flow: &[(f64, DiscreteManifold)],
    x: usize,
    d: f64,
    c1: f64,
    c2: f64,
) -> Result<TailReport> {
    let n = 2.0_f64;
    let mut times = Vec::with_capacity(flow.len());
    let mut tails = Vec::with_capacity(flow.len());
    for (t, man) in flow {
        if !(*t > 0.0) {
            return Err(Error::InvalidInput("tail check needs t > 0".into()));
        }
        let dist = distances_from(man, x, Stencil::default())?;
        let rad = t.sqrt().sqrt() * d;
        let s: f64 = (0..man.len())
            .filter(|&c| dist[c].is_finite() && dist[c] >= rad)
            .map(|c| (-dist[c] * dist[c] / (c2 * t)).exp() * man.cell_volume(c))
            .sum();
        times.push(*t);
        tails.push(c2 / t.powf(n / 2.0) * s);
    }
    let fitted_c = smallest_feasible(|c| {
        times
            .iter()
            .zip(&tails)
            .all(|(t, tail)| *tail <= c * (-d * d / (c * t.sqrt())).exp())
    });
    let threshold_ok = d >= 2.0 * (n - 1.0).powf(1.5) * c1.sqrt() * c2;
    Ok(TailReport {
        times,
        tails,
        fitted_c,
        threshold_ok,
    })
}

/// Both sides of `(C/t^{n/2})e^{−d²/(Ct)} ≤ (C₁/T^{n/2})e^{−d²/(C₁T)}`.
pub fn heat_comparison_sides(c: f64, c1: f64, n: usize, t: f64, big_t: f64, d: f64) -> (f64, f64) {
    let h = n as f64 / 2.0;
    let lhs = c / t.powf(h) * (-d * d / (c * t)).exp();
    let rhs = c1 / big_t.powf(h) * (-d * d / (c1 * big_t)).exp();
    (lhs, rhs)
}

/// A constant `C₁(C, n)` for which the comparison holds whenever `t < T ≤ d²`.
pub fn heat_comparison_constant(c: f64, n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (2.0 * c).max(c * (n as f64 * c / std::f64::consts::E).powf(h))
}

/// Outcome of the sampled scalar comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub samples: usize,
    pub analytic_c1: f64,
    /// Samples violating the comparison with the analytic constant.
    pub violations: usize,
    /// Smallest grid constant satisfying every sample.
    pub fitted_c1: Option<f64>,
    /// Worst ratio LHS/RHS with the analytic constant.
    pub worst_ratio: f64,
}

/// Samples `(t, T, d)` with `t < T ≤ d²`, `d ∈ (0, 2]`, and checks the comparison.
pub fn heat_comparison_sweep<R: Rng + ?Sized>(
    c: f64,
    n: usize,
    samples: usize,
    rng: &mut R,
) -> ComparisonReport {
    let analytic = heat_comparison_constant(c, n);
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let d: f64 = rng.random_range(0.01..2.0);
        let big_t = d * d * rng.random_range(1e-3..=1.0);
        let t = big_t * rng.random_range(1e-3..1.0);
        draws.push((t, big_t, d));
    }
    let mut violations = 0;
    let mut worst = 0.0_f64;
    for &(t, big_t, d) in &draws {
        let (l, r) = heat_comparison_sides(c, analytic, n, t, big_t, d);
        if l > r {
            violations += 1;
        }
        if r > 0.0 {
            worst = worst.max(l / r);
        }
    }
    let fitted_c1 = smallest_feasible(|c1| {
        draws.iter().all(|&(t, big_t, d)| {
            let (l, r) = heat_comparison_sides(c, c1, n, t, big_t, d);
            l <= r
        })
    });
    ComparisonReport {
        samples,
        analytic_c1: analytic,
        violations,
        fitted_c1,
        worst_ratio: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn comparison_holds_with_analytic_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for c in [0.5, 1.0, 4.0] {
            let rep = heat_comparison_sweep(c, 2, 1000, &mut rng);
            assert_eq!(rep.violations, 0);
            assert!(rep.fitted_c1.unwrap() <= rep.analytic_c1 * 1.01);
        }
    }

    #[test]
    fn comparison_near_equal_times() {
        let c = 1.0;
        let c1 = heat_comparison_constant(c, 2);
        let (l, r) = heat_comparison_sides(c, c1, 2, 0.25 * (1.0 - 1e-9), 0.25, 0.5);
        assert!(l / r <= 1.0 + 1e-9);
    }

    #[test]
    fn flat_ball_integral_is_bounded() {
        let man = DiscreteManifold::flat(64).unwrap();
        let rep = gaussian_ball_integral(&man, 0, 0.4, 1.0, &[1e-3, 1e-2, 1e-1, 1.0]).unwrap();
        // On the plane the integral tends to π·C₁² as t ↓ 0.
        assert!(rep.max < 4.0, "{:?}", rep.values);
    }
}
