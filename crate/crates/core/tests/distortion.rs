use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricci_core::distortion::*;
use ricci_core::flows::ConformalSurface;
use std::f64::consts::PI;

fn times() -> Vec<f64> {
    (1..=10).map(|k| k as f64 * 1e-3).collect()
}

fn report(m: usize) -> (SurfaceBenchmark, Vec<(usize, usize)>, DistortionReport) {
    let bench = torus_benchmark(m, 0.3, &times()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs = sample_pairs(&bench.snapshots[0].1, 20, 10, &mut rng);
    let rep = verify_distortion(
        &bench.snapshots,
        bench.k,
        bench.c0,
        &bench.gauss,
        &pairs,
        DistortionOptions::for_grid(m),
    )
    .unwrap();
    (bench, pairs, rep)
}

#[test]
fn torus_benchmark_holds_all_inequalities() {
    let (_, pairs, rep) = report(128);
    assert_eq!(pairs.len(), 200);
    assert!(rep.hypotheses_met);
    assert!(rep.skipped.is_empty());
    assert!(
        rep.violations.is_empty(),
        "{:?}",
        &rep.violations[..rep.violations.len().min(3)]
    );
    assert!(rep.exponent >= 1.0);
    assert!(rep.band_pairs > 0);
    assert!(rep.holder_fit_residual < 0.1);
    assert_eq!(rep.regime_misses, 0);

    let (_, _, coarse) = report(64);
    assert!((coarse.beta / rep.beta - 1.0).abs() <= 0.25);
}

#[test]
fn limit_ladder_is_cauchy() {
    let m = 64;
    let (bench, pairs, rep) = report(m);
    let init =
        ConformalSurface::from_fn(m, |x, y| 0.3 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
            .unwrap();
    let ladder: Vec<f64> = (0..9).map(|j| 1e-4 * 10f64.powi(-j)).collect();
    let snaps = ladder_snapshots(&init, &ladder).unwrap();
    let lim = limit_metric(&snaps, &pairs, rep.beta, bench.c0, bench.k, 1e-5).unwrap();
    assert!(lim.final_increment <= 1e-5);
    assert_eq!(lim.rung_violations, 0);
    assert_eq!(lim.upper_violations, 0);
    assert!(lim.gamma > 0.0);
}
