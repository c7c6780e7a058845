use ricci_core::curvature::{ConeKind, ConeSpec};
use ricci_core::cutoff::{build_cutoff, verify_cutoff, CutoffParams};
use ricci_core::expansion::*;
use ricci_core::flows::SurfaceScheme;
use ricci_core::grid::DiscreteManifold;
use ricci_core::heat::{ExpansionFlow, Stage};

fn cone() -> ConeSpec {
    ConeSpec::new(ConeKind::NonnegOperator)
}

fn small() -> PipelineConfig {
    PipelineConfig::default()
}

#[test]
fn flat_run_keeps_ell_zero() {
    let cfg = PipelineConfig {
        alpha0: 0.0,
        ..small()
    };
    let run = run_pipeline(&cfg, &cone()).unwrap();
    assert!(run.passed, "{:?}", run.audits);
    assert_eq!(run.audits.len(), 5);
    assert!(run.max_ell() <= 1e-10);
    let st = &run.flow.stages()[5];
    let tr =
        ell_integral_estimate(&run, run.x0, st.t_end, &cone(), EstimateOptions::default()).unwrap();
    assert_eq!(tr.i_term, 0.0);
    assert_eq!(tr.j_term, 0.0);
    assert!(tr.passes);
}

#[test]
fn bump_run_passes_audits_and_estimate() {
    let cfg = PipelineConfig::default();
    let run = run_pipeline(&cfg, &cone()).unwrap();
    assert!(run.passed, "{:?}", run.audits);
    assert!(run.schedule.radius_drop() <= 1.0);
    assert!(run.flow.junction_expanding.iter().all(|j| *j));
    for a in &run.audits {
        assert!(a.apa3_ell <= run.schedule.constants.c4 * cfg.alpha0);
    }
    let last = &run.flow.stages()[cfg.stages];
    for st in 1..=cfg.stages {
        let stage = &run.flow.stages()[st];
        for k in [1, stage.steps()] {
            let tr = ell_integral_estimate(
                &run,
                run.x0 + 3,
                stage.frame_time(k),
                &cone(),
                EstimateOptions::default(),
            )
            .unwrap();
            assert!(tr.passes, "{tr:?}");
            assert!(tr.boundary_term >= 0.0 && tr.i_term >= 0.0 && tr.j_term >= 0.0);
        }
    }
    let tr = ell_integral_estimate(
        &run,
        run.x0,
        last.t_end,
        &cone(),
        EstimateOptions::default(),
    )
    .unwrap();
    assert!(tr.boundary_ratio <= 1.0);
    assert!(tr.dominance >= 10.0);
    assert!(tr.j_series_constant.is_finite());
}

#[test]
fn weak_inequality_on_bump_run() {
    let cfg = small();
    let run = run_pipeline(&cfg, &cone()).unwrap();
    let c = run.calibration.evolution_c;
    let centre = run.flow.stages()[0].manifold(0).center(run.x0);
    let psi = |_: f64, man: &DiscreteManifold| -> Vec<f64> {
        (0..man.len())
            .map(|cell| {
                let (x, y) = man.center(cell);
                let r2 = (x - centre.0).powi(2) + (y - centre.1).powi(2);
                if r2 < 0.15f64.powi(2) {
                    (1.0 - r2 / 0.15f64.powi(2)).powi(3)
                } else {
                    0.0
                }
            })
            .collect()
    };
    for j in 1..cfg.stages {
        let rep = weak_inequality_check(
            &run.flow,
            c,
            &cone(),
            psi,
            None,
            (run.times[j], run.times[j + 1]),
        )
        .unwrap();
        assert!(rep.steps > 0);
        assert!(rep.slack >= -1e-6, "{rep:?}");
    }
}

#[test]
fn weak_inequality_with_cutoff_envelopes() {
    let cfg = small();
    let run = run_pipeline(&cfg, &cone()).unwrap();
    let stages = run.flow.stages();
    let (t0, t1) = (run.times[1], run.times[3]);
    let mask = stages[2].mask().to_vec();
    let mut snaps = Vec::new();
    for (st, stage) in stages.iter().enumerate().take(3).skip(1) {
        for k in (if st == 1 { 0 } else { 1 })..=stage.steps() {
            snaps.push((
                stage.frame_time(k) - t0,
                stage.manifold(k).with_mask(mask.clone()).unwrap(),
            ));
        }
    }
    let cal = &run.calibration;
    let params = CutoffParams {
        radius: 0.12,
        width: 0.04,
        k: cal.k,
        c0: cal.c1,
        beta: cal.beta,
    };
    let cf = build_cutoff(&snaps, run.x0, params).unwrap();
    let rep = verify_cutoff(&cf, &snaps).unwrap();
    let times: Vec<f64> = snaps.iter().map(|s| s.0 + t0).collect();
    let psi = |t: f64, _: &DiscreteManifold| -> Vec<f64> {
        let k = times
            .iter()
            .position(|s| (s - t).abs() <= 1e-9 * t)
            .unwrap();
        cf.phi[k].clone()
    };
    let envelopes = (rep.envelope_laplacian, rep.envelope_time_derivative);
    let weak = weak_inequality_check(
        &run.flow,
        cal.evolution_c,
        &cone(),
        psi,
        Some(envelopes),
        (t0, t1),
    )
    .unwrap();
    assert_eq!(weak.envelope_valid, Some(true));
    assert!(weak.envelope_slack.unwrap() >= 0.0, "{weak:?}");
}

#[test]
fn larger_bump_never_lowers_ell() {
    let m = 48;
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for alpha in [0.01, 0.03, 0.05] {
        let init = bump_surface(m, 0.08, alpha).unwrap();
        let (stage, _) = Stage::from_surface_flow(&init, 2e-3, 10, 4, SurfaceScheme::Rk2).unwrap();
        let flow = ExpansionFlow::single(stage);
        let st = &flow.stages()[0];
        let ells: Vec<Vec<f64>> = (0..=st.steps())
            .map(|k| frame_curvature(st, k).ell_values(&cone()).unwrap())
            .collect();
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&ells) {
                assert!(a.iter().zip(b).all(|(x, y)| y >= x));
            }
        }
        prev = Some(ells);
    }
}

#[test]
fn completion_curvature_scales_like_rho_squared() {
    // A disk of unit radius: the grid disk of radius 0.45 scaled by 1/0.45.
    let m = 256;
    let man = DiscreteManifold::with_factor(m, vec![(1.0f64 / 0.45).powi(2); m * m]).unwrap();
    let region: Vec<bool> = (0..man.len())
        .map(|c| {
            let (x, y) = man.center(c);
            (x - 0.5).hypot(y - 0.5) < 0.45
        })
        .collect();
    let gammas: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&rho| {
            collar_curvature_constant(&conformal_completion(&man, &region, rho).unwrap()).unwrap()
        })
        .collect();
    let mean = gammas.iter().sum::<f64>() / 3.0;
    for g in &gammas {
        assert!((g / mean - 1.0).abs() <= 0.3, "{gammas:?}");
    }
}
