//! Distance distortion along surface flows: expanding and shrinking estimates, the Hölder lower
//! bound and the `t ↓ 0` limit distance.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::{Error, Result};
use crate::flows::{sample_surface_flow, ConformalSurface, SurfaceScheme};
use crate::grid::{distances_from, DiscreteManifold, Stencil};

/// Which estimate a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistortionCheck {
    Expanding,
    Shrinking,
    Holder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: DistortionCheck,
    pub pair: (usize, usize),
    pub s: f64,
    pub t: f64,
    pub excess: f64,
}

/// Per-pair distance series and the fitted distortion constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub pairs: Vec<(usize, usize)>,
    pub times: Vec<f64>,
    /// `series[p][k] = d_{g(t_k)}(pair p)`.
    pub series: Vec<Vec<f64>>,
    /// Pairs dropped because they were unreachable at some time.
    pub skipped: Vec<(usize, usize)>,
    pub hypotheses_met: bool,
    pub violations: Vec<Violation>,
    /// Smallest `β` with `d_t ≥ d_s − β√c₀(√t − √s)` over all pairs and `s ≤ t`.
    pub beta: f64,
    /// `1 + 2(n−1)c₀`.
    pub exponent: f64,
    /// Largest `γ` with `d_t ≥ γ·d₀^exponent` over the pairs inside the fit band.
    pub gamma: f64,
    pub band_pairs: usize,
    /// Largest relative residual of a log-log fit of `min_t d_t` against `d₀` within the band.
    pub holder_fit_residual: f64,
    /// Pair-time samples breaking the two-regime retention bounds around `t₀ = (1/c₀)(d₀/(2β))²`.
    pub regime_misses: usize,
}

/// Options for [`verify_distortion`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionOptions {
    /// Pairs with `d₀` in this band enter the Hölder fit.
    pub band: (f64, f64),
    /// Relative slack before a violation is recorded.
    pub tol: f64,
}

impl DistortionOptions {
    /// Band `[20h, 0.25]` for an `m×m` grid.
    pub fn for_grid(m: usize) -> Self {
        Self {
            band: (20.0 / m as f64, 0.25),
            tol: 1e-12,
        }
    }
}

/// Distances `d_{g(t)}(x, y)` for each pair and snapshot, grouped by source cell.
pub fn pair_series(
    snapshots: &[(f64, DiscreteManifold)],
    pairs: &[(usize, usize)],
) -> Result<Vec<Vec<f64>>> {
    let mut sources: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    sources.sort_unstable();
    sources.dedup();
    let mut out = vec![vec![0.0; snapshots.len()]; pairs.len()];
    for (k, (_, man)) in snapshots.iter().enumerate() {
        for &x in &sources {
            let d = distances_from(man, x, Stencil::default())?;
            for (p, &(a, b)) in pairs.iter().enumerate() {
                if a == x {
                    out[p][k] = d[b];
                }
            }
        }
    }
    Ok(out)
}

/// Checks the three distortion estimates on snapshot distances (`n = 2`).
///
/// `k` is the Ricci lower bound (`K_gauss ≥ −k`) and `c0` the decay constant (`|K| ≤ c₀/t`).
pub fn verify_distortion(
    snapshots: &[(f64, DiscreteManifold)],
    k: f64,
    c0: f64,
    gauss: &[Vec<f64>],
    pairs: &[(usize, usize)],
    opts: DistortionOptions,
) -> Result<DistortionReport> {
    if snapshots.is_empty() || snapshots[0].0 != 0.0 {
        return Err(Error::InvalidInput(
            "distortion needs snapshots starting at t = 0".into(),
        ));
    }
    let n = 2.0;
    let times: Vec<f64> = snapshots.iter().map(|(t, _)| *t).collect();
    let mut hypotheses_met = gauss.len() == snapshots.len();
    for (kk, (t, man)) in gauss.iter().zip(snapshots) {
        for c in 0..man.len() {
            if man.is_active(c)
                && (kk[c] < -k * (1.0 + 1e-12)
                    || (*t > 0.0 && kk[c].abs() * t > c0 * (1.0 + 1e-12)))
            {
                hypotheses_met = false;
            }
        }
    }
    let all = pair_series(snapshots, pairs)?;
    let mut kept_pairs = Vec::new();
    let mut series = Vec::new();
    let mut skipped = Vec::new();
    for (p, s) in pairs.iter().zip(all) {
        if s.iter().all(|d| d.is_finite()) {
            kept_pairs.push(*p);
            series.push(s);
        } else {
            skipped.push(*p);
        }
    }
    let sc = c0.sqrt();
    let mut beta = 0.0_f64;
    for s in &series {
        for a in 0..times.len() {
            for b in a + 1..times.len() {
                let gap = times[b].sqrt() - times[a].sqrt();
                if gap > 0.0 && sc > 0.0 {
                    beta = beta.max((s[a] - s[b]) / (sc * gap));
                }
            }
        }
    }
    let exponent = 1.0 + 2.0 * (n - 1.0) * c0;
    let mut violations = Vec::new();
    let mut gamma = f64::INFINITY;
    let mut band_pairs = 0;
    let mut fit_points = Vec::new();
    let mut regime_misses = 0;
    for (p, s) in kept_pairs.iter().zip(&series) {
        let d0 = s[0];
        for a in 0..times.len() {
            for b in a + 1..times.len() {
                let grow = (k * (times[b] - times[a])).exp() * s[a];
                if s[b] > grow * (1.0 + opts.tol) {
                    violations.push(Violation {
                        check: DistortionCheck::Expanding,
                        pair: *p,
                        s: times[a],
                        t: times[b],
                        excess: s[b] - grow,
                    });
                }
                let floor = s[a] - beta * sc * (times[b].sqrt() - times[a].sqrt());
                if s[b] < floor - opts.tol * s[a] {
                    violations.push(Violation {
                        check: DistortionCheck::Shrinking,
                        pair: *p,
                        s: times[a],
                        t: times[b],
                        excess: floor - s[b],
                    });
                }
            }
        }
        if d0 >= opts.band.0 && d0 <= opts.band.1 {
            band_pairs += 1;
            let dmin = s.iter().copied().fold(f64::INFINITY, f64::min);
            gamma = gamma.min(dmin / d0.powf(exponent));
            fit_points.push((d0, dmin));
            if beta > 0.0 && c0 > 0.0 {
                let t0 = (d0 / (2.0 * beta)).powi(2) / c0;
                for (t, d) in times.iter().zip(s) {
                    let retained = if *t <= t0 {
                        0.5 * d0
                    } else {
                        0.5 * d0 * (t / t0).powf(-(n - 1.0) * c0)
                    };
                    if *d < retained {
                        regime_misses += 1;
                    }
                }
            }
        }
    }
    if !gamma.is_finite() {
        gamma = 0.0;
    }
    for (p, s) in kept_pairs.iter().zip(&series) {
        let d0 = s[0];
        if d0 < opts.band.0 || d0 > opts.band.1 {
            continue;
        }
        for (t, d) in times.iter().zip(s) {
            let lower = gamma * d0.powf(exponent);
            if *d < lower * (1.0 - opts.tol) {
                violations.push(Violation {
                    check: DistortionCheck::Holder,
                    pair: *p,
                    s: 0.0,
                    t: *t,
                    excess: lower - d,
                });
            }
        }
    }
    let holder_fit_residual = if fit_points.len() >= 2 {
        let xs: Vec<f64> = fit_points.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = fit_points.iter().map(|p| p.1.ln()).collect();
        let (a, b) = crate::fit::linear_fit(&xs, &ys);
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| ((a + b * x).exp() / y.exp() - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(DistortionReport {
        pairs: kept_pairs,
        times,
        series,
        skipped,
        hypotheses_met,
        violations,
        beta,
        exponent,
        gamma,
        band_pairs,
        holder_fit_residual,
        regime_misses,
    })
}

/// Limit distances `d₀ = lim_{t↓0} d_{g(t)}` and the sandwich constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitMetric {
    pub pairs: Vec<(usize, usize)>,
    /// Ladder times, decreasing.
    pub ladder: Vec<f64>,
    /// Monotone-corrected values `d_{g(t)} + β√C√t` per pair and rung.
    pub corrected: Vec<Vec<f64>>,
    pub d0: Vec<f64>,
    /// Largest correction step between the last two rungs.
    pub final_increment: f64,
    /// Rungs where `d_{t_{k+1}} − d_{t_k} > β√C(√t_k − √t_{k+1})`.
    pub rung_violations: usize,
    /// Largest `γ` with `γ·d₀^{1+2(n−1)C} ≤ d_t` at the sampled pairs and times.
    pub gamma: f64,
    /// Samples breaking `d_t ≤ e^{Kt}d₀`.
    pub upper_violations: usize,
}

/// Extrapolates `d₀` along a decreasing time ladder of snapshots (`n = 2`).
pub fn limit_metric(
    ladder: &[(f64, DiscreteManifold)],
    pairs: &[(usize, usize)],
    beta: f64,
    c: f64,
    k: f64,
    tol: f64,
) -> Result<LimitMetric> {
    if ladder.len() < 2 {
        return Err(Error::InvalidInput(
            "limit ladder needs at least two rungs".into(),
        ));
    }
    if ladder
        .windows(2)
        .any(|w| !(w[1].0 < w[0].0) || w[1].0 < 0.0)
    {
        return Err(Error::InvalidInput(
            "ladder times must decrease and stay nonnegative".into(),
        ));
    }
    let times: Vec<f64> = ladder.iter().map(|(t, _)| *t).collect();
    let series = pair_series(ladder, pairs)?;
    let slope = beta * c.sqrt();
    let mut corrected = Vec::with_capacity(pairs.len());
    let mut d0 = Vec::with_capacity(pairs.len());
    let mut final_increment = 0.0_f64;
    let mut rung_violations = 0;
    for s in &series {
        let cor: Vec<f64> = s
            .iter()
            .zip(&times)
            .map(|(d, t)| d + slope * t.sqrt())
            .collect();
        for kk in 0..times.len() - 1 {
            let allowed = slope * (times[kk].sqrt() - times[kk + 1].sqrt());
            if s[kk + 1] - s[kk] > allowed * (1.0 + 1e-12) + 1e-15 {
                rung_violations += 1;
            }
        }
        let last = cor.len() - 1;
        final_increment = final_increment.max((cor[last - 1] - cor[last]).abs());
        d0.push(cor[last]);
        corrected.push(cor);
    }
    if !(final_increment <= tol) {
        return Err(Error::NonConvergentLimit {
            increment: final_increment,
            tol,
        });
    }
    let exponent = 1.0 + 2.0 * c;
    let mut gamma = f64::INFINITY;
    let mut upper_violations = 0;
    for (s, base) in series.iter().zip(&d0) {
        for (d, t) in s.iter().zip(&times) {
            if *base > 0.0 {
                gamma = gamma.min(d / base.powf(exponent));
            }
            if *d > (k * t).exp() * base * (1.0 + 1e-9) {
                upper_violations += 1;
            }
        }
    }
    Ok(LimitMetric {
        pairs: pairs.to_vec(),
        ladder: times,
        corrected,
        d0,
        final_increment,
        rung_violations,
        gamma: if gamma.is_finite() { gamma } else { 0.0 },
        upper_violations,
    })
}

/// Snapshots of a surface flow with the fitted curvature constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceBenchmark {
    pub snapshots: Vec<(f64, DiscreteManifold)>,
    pub gauss: Vec<Vec<f64>>,
    /// `max(−K)` over all snapshots.
    pub k: f64,
    /// `max t·|K|` over the snapshots with `t > 0`.
    pub c0: f64,
}

/// The conformal torus `u₀ = a·sin(2πx)·sin(2πy)` sampled at `0` and the increasing `times`.
pub fn torus_benchmark(m: usize, amplitude: f64, times: &[f64]) -> Result<SurfaceBenchmark> {
    use std::f64::consts::PI;
    let init = ConformalSurface::from_fn(m, |x, y| {
        amplitude * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
    })?;
    surface_benchmark(&init, times)
}

/// Samples `initial` at its own time and at the increasing `times`.
pub fn surface_benchmark(initial: &ConformalSurface, times: &[f64]) -> Result<SurfaceBenchmark> {
    let surfaces = sample_surface_flow(initial, times, SurfaceScheme::Rk2)?;
    let mut snapshots = vec![(initial.t, initial.manifold())];
    let mut gauss = vec![initial.gauss_curvature()];
    for s in &surfaces {
        snapshots.push((s.t, s.manifold()));
        gauss.push(s.gauss_curvature());
    }
    let k = gauss.iter().flatten().map(|v| -v).fold(0.0, f64::max);
    let c0 = snapshots
        .iter()
        .zip(&gauss)
        .filter(|((t, _), _)| *t > 0.0)
        .map(|((t, _), g)| t * g.iter().map(|v| v.abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    Ok(SurfaceBenchmark {
        snapshots,
        gauss,
        k,
        c0,
    })
}

/// `sources × targets` pairs from uniform positions, mapped to the cells of `man`.
pub fn sample_pairs<R: Rng>(
    man: &DiscreteManifold,
    sources: usize,
    targets: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(sources * targets);
    for _ in 0..sources {
        let s = man.cell_at(rng.random(), rng.random());
        for _ in 0..targets {
            out.push((s, man.cell_at(rng.random(), rng.random())));
        }
    }
    out
}

/// Surfaces at the decreasing ladder times, each flowed from `initial`.
pub fn ladder_snapshots(
    initial: &ConformalSurface,
    ladder: &[f64],
) -> Result<Vec<(f64, DiscreteManifold)>> {
    let mut asc = ladder.to_vec();
    asc.reverse();
    let mut out: Vec<(f64, DiscreteManifold)> =
        sample_surface_flow(initial, &asc, SurfaceScheme::Rk2)?
            .iter()
            .map(|s| (s.t, s.manifold()))
            .collect();
    out.reverse();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_flow_has_no_distortion() {
        let man = DiscreteManifold::flat(24).unwrap();
        let snaps: Vec<(f64, DiscreteManifold)> =
            (0..4).map(|k| (k as f64 * 0.01, man.clone())).collect();
        let gauss = vec![vec![0.0; man.len()]; 4];
        let pairs = vec![(0, 100), (5, 300), (7, 7 + 24 * 6)];
        let rep = verify_distortion(
            &snaps,
            0.0,
            0.0,
            &gauss,
            &pairs,
            DistortionOptions::for_grid(24),
        )
        .unwrap();
        assert!(rep.violations.is_empty());
        assert_eq!(rep.beta, 0.0);
        assert_eq!(rep.exponent, 1.0);
    }

    #[test]
    fn uniform_shrink_matches_closed_form() {
        // Distances on a round sphere scale by √(1 − 2t); emulate with uniform conformal factors.
        let m = 24;
        let times = [0.0, 0.05, 0.1, 0.2];
        let snaps: Vec<(f64, DiscreteManifold)> = times
            .iter()
            .map(|t| {
                (
                    *t,
                    DiscreteManifold::with_factor(m, vec![1.0 - 2.0 * t; m * m]).unwrap(),
                )
            })
            .collect();
        let gauss: Vec<Vec<f64>> = times
            .iter()
            .map(|t| vec![1.0 / (1.0 - 2.0 * t); m * m])
            .collect();
        let pairs = vec![(0, 200), (3, 77)];
        let c0 = 0.2 / 0.6;
        let rep = verify_distortion(
            &snaps,
            0.0,
            c0,
            &gauss,
            &pairs,
            DistortionOptions::for_grid(m),
        )
        .unwrap();
        let d0 = rep.series.iter().map(|s| s[0]).fold(0.0, f64::max);
        // sup over the window of |d/d√t| of √(1−2t)·d₀ is 2√t·d₀/√(1−2t) at t = 0.2.
        let analytic = 2.0 * 0.2f64.sqrt() * d0 / 0.6f64.sqrt();
        assert!(rep.beta * c0.sqrt() <= analytic * (1.0 + 1e-12));
        assert!(rep
            .violations
            .iter()
            .all(|v| v.check != DistortionCheck::Shrinking));
    }

    #[test]
    fn smooth_limit_recovers_initial_distance() {
        let m = 16;
        let ladder: Vec<(f64, DiscreteManifold)> = (0..30)
            .map(|k| {
                let t = 0.01 * 0.5f64.powi(k);
                (
                    t,
                    DiscreteManifold::with_factor(m, vec![1.0 + t; m * m]).unwrap(),
                )
            })
            .collect();
        let man0 = DiscreteManifold::flat(m).unwrap();
        let d_true = crate::grid::geodesic_distance(&man0, 0, 70).unwrap();
        let lim = limit_metric(&ladder, &[(0, 70)], 0.0, 1.0, 1.0, 1e-6).unwrap();
        assert!((lim.d0[0] - d_true).abs() < 1e-6);
        assert!(matches!(
            limit_metric(&ladder[..3], &[(0, 70)], 0.0, 1.0, 1.0, 1e-12),
            Err(Error::NonConvergentLimit { .. })
        ));
    }
}
