use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricci_core::distortion::{
    ladder_snapshots, limit_metric, sample_pairs, torus_benchmark, verify_distortion,
    DistortionCheck, DistortionOptions, DistortionReport, SurfaceBenchmark,
};
use ricci_core::Result;

use super::{torus_bump, Context};
use crate::report::{Series, SuiteOutput};

const SUITE: &str = "distortion";

fn benchmark_times() -> Vec<f64> {
    (1..=10).map(|k| k as f64 * 1e-3).collect()
}

type Audit = (SurfaceBenchmark, Vec<(usize, usize)>, DistortionReport);

/// Benchmark, 200 sampled pairs and the distortion audit on the `m×m` torus.
fn audit(m: usize, amplitude: f64, seed: u64) -> Result<Audit> {
    let bench = torus_benchmark(m, amplitude, &benchmark_times())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = sample_pairs(&bench.snapshots[0].1, 20, 10, &mut rng);
    let rep = verify_distortion(
        &bench.snapshots,
        bench.k,
        bench.c0,
        &bench.gauss,
        &pairs,
        DistortionOptions::for_grid(m),
    )?;
    Ok((bench, pairs, rep))
}

pub fn run(ctx: &Context) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let m = ctx.cfg.resolution.m;
    let amplitude = ctx.cfg.amplitude();
    let seed = ctx.cfg.seed;

    let (bench, _, fine) = audit(2 * m, amplitude, seed)?;
    let case = format!("torus m={}", 2 * m);
    out.hard(
        SUITE,
        &case,
        "pairs",
        (fine.pairs.len() - fine.skipped.len()) as f64,
        (200.0, 200.0),
    );
    out.hard_flag(SUITE, &case, "hypotheses_met", fine.hypotheses_met);
    for (check, name) in [
        (DistortionCheck::Expanding, "expanding_violations"),
        (DistortionCheck::Shrinking, "shrinking_violations"),
        (DistortionCheck::Holder, "holder_violations"),
    ] {
        let count = fine.violations.iter().filter(|v| v.check == check).count();
        out.hard(SUITE, &case, name, count as f64, (0.0, 0.0));
    }
    out.hard(
        SUITE,
        &case,
        "regime_misses",
        fine.regime_misses as f64,
        (0.0, 0.0),
    );
    out.info(
        SUITE,
        &case,
        "holder_fit_residual",
        fine.holder_fit_residual,
    );

    let (_, pairs, coarse) = audit(m, amplitude, seed)?;
    let drift = (coarse.beta / fine.beta - 1.0).abs();
    out.soft(
        SUITE,
        &format!("torus m={m} vs m={}", 2 * m),
        "beta_relative_drift",
        drift,
        (0.0, 0.25),
    );

    let ladder: Vec<f64> = (0..9).map(|j| 1e-4 * 10f64.powi(-j)).collect();
    let coarse_bench = torus_benchmark(m, amplitude, &benchmark_times())?;
    let snaps = ladder_snapshots(&torus_bump(m, amplitude)?, &ladder)?;
    let lim = limit_metric(
        &snaps,
        &pairs,
        coarse.beta,
        coarse_bench.c0,
        coarse_bench.k,
        1e-5,
    )?;
    let case = format!("limit ladder m={m}");
    out.hard(
        SUITE,
        &case,
        "final_increment",
        lim.final_increment,
        (0.0, 1e-5),
    );
    out.hard(
        SUITE,
        &case,
        "rung_violations",
        lim.rung_violations as f64,
        (0.0, 0.0),
    );
    out.hard(
        SUITE,
        &case,
        "upper_violations",
        lim.upper_violations as f64,
        (0.0, 0.0),
    );

    out.constant(
        "distortion.beta",
        "distortion",
        fine.beta,
        Some(0.25),
        "fitted β in d_t ≥ d_s − β√c₀(√t − √s)",
    );
    out.constant(
        "distortion.gamma",
        "distortion",
        fine.gamma,
        None,
        "Hölder constant γ in d_t ≥ γ·d₀^(1+2c₀)",
    );
    out.constant(
        "distortion.c0",
        "distortion",
        bench.c0,
        None,
        "curvature decay c₀ = max t·|K| of the benchmark",
    );
    out.constant(
        "distortion.k",
        "distortion",
        bench.k,
        None,
        "Ricci lower bound K = max(−K_Gauss)",
    );
    out.constant(
        "distortion.ladder_increment",
        "distortion",
        lim.final_increment,
        Some(1e-5),
        "last correction step of the t ↓ 0 ladder",
    );
    out.constant(
        "distortion.limit_gamma",
        "distortion",
        lim.gamma,
        None,
        "Hölder constant of the t ↓ 0 limit distance",
    );

    let slope = fine.beta * bench.c0.sqrt();
    let p = fine
        .series
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1[0] - a.1[a.1.len() - 1]).total_cmp(&(b.1[0] - b.1[b.1.len() - 1])))
        .map_or(0, |(i, _)| i);
    let times = &fine.times;
    let points: Vec<(f64, f64)> = times
        .iter()
        .copied()
        .zip(fine.series[p].iter().copied())
        .collect();
    let envelope: Vec<(f64, f64)> = times
        .iter()
        .map(|t| (*t, fine.series[p][0] - slope * (t.sqrt() - times[0].sqrt())))
        .collect();
    out.series.push(
        Series::new("pair", "t", "d_t(x, y)", points).with_overlay("d_s − β√c₀(√t − √s)", envelope),
    );
    Ok(out)
}
