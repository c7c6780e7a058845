use ricci_core::curvature::{ConeKind, ConeSpec};
use ricci_core::expansion::{
    ell_integral_estimate, run_pipeline, EstimateOptions, ExpansionRun, PipelineConfig,
};
use ricci_core::Result;

use super::Context;
use crate::report::{Series, SuiteOutput};

const SUITE: &str = "expansion";

fn audits(out: &mut SuiteOutput, run: &ExpansionRun, tag: &str) {
    for a in &run.audits {
        let case = format!("{tag} stage {}", a.index);
        out.hard_flag(SUITE, &case, "apa1", a.apa1);
        out.hard_flag(SUITE, &case, "apa2", a.apa2);
        out.hard_flag(SUITE, &case, "apa3", a.apa3);
        out.hard_flag(SUITE, &case, "junction", a.junction);
        out.info(SUITE, &case, "apa2_ratio", a.apa2_ratio);
        out.info(SUITE, &case, "apa3_ell", a.apa3_ell);
        out.info(SUITE, &case, "doubling_ratio", a.doubling_ratio);
        out.info(SUITE, &case, "volume_ratio", a.volume_ratio);
        if let Some(f) = &a.failure {
            out.notices.push(format!("{tag} stage {}: {f}", a.index));
        }
    }
}

fn estimates(out: &mut SuiteOutput, run: &ExpansionRun, cone: &ConeSpec, tag: &str) {
    let stages = run.flow.stages();
    for (st, stage) in stages.iter().enumerate().skip(1) {
        for k in [1, stage.steps()] {
            let t = stage.frame_time(k);
            for dx in [0usize, 3] {
                let x = run.x0 + dx;
                let case = format!("{tag} stage {st} frame {k} x0+{dx}");
                match ell_integral_estimate(run, x, t, cone, EstimateOptions::default()) {
                    Ok(tr) => {
                        out.hard(
                            SUITE,
                            &case,
                            "estimate_slack",
                            tr.bound - tr.measured_ell,
                            (-1e-12, f64::INFINITY),
                        );
                        out.info(SUITE, &case, "boundary_ratio", tr.boundary_ratio);
                    }
                    Err(e) => {
                        out.hard_flag(SUITE, &case, "estimate_evaluated", false);
                        out.notices.push(format!("{case}: {e}"));
                    }
                }
            }
        }
    }
}

pub fn run(ctx: &Context) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let cone = ConeSpec::new(ConeKind::NonnegOperator);
    for alpha0 in ctx.cfg.alpha0() {
        let cfg = PipelineConfig {
            m: 2 * ctx.cfg.resolution.m,
            alpha0,
            strict: ctx.strict,
            ..PipelineConfig::default()
        };
        let run = run_pipeline(&cfg, &cone)?;
        let tag = format!("alpha0={alpha0} m={}", cfg.m);
        out.hard(
            SUITE,
            &tag,
            "stages_run",
            run.audits.len() as f64,
            (cfg.stages as f64, cfg.stages as f64),
        );
        audits(&mut out, &run, &tag);
        out.hard(
            SUITE,
            &tag,
            "radius_drop",
            run.schedule.radius_drop(),
            (0.0, 1.0),
        );
        out.hard_flag(
            SUITE,
            &tag,
            "junctions_expanding",
            run.flow.junction_expanding.iter().all(|j| *j),
        );
        let c4a = run.schedule.constants.c4 * alpha0;
        out.hard(SUITE, &tag, "max_ell", run.max_ell(), (0.0, c4a));
        estimates(&mut out, &run, &cone, &tag);

        let cal = &run.calibration;
        let sc = &run.schedule;
        let key = |name: &str| format!("expansion.alpha0={alpha0}.{name}");
        out.constant(
            &key("nu"),
            "expansion_driver",
            sc.nu,
            None,
            "junction time ratio ν = 1 + 1/(4C₃)",
        );
        out.constant(
            &key("tau"),
            "expansion_driver",
            cal.tau,
            None,
            "schedule time window τ",
        );
        out.constant(
            &key("c1"),
            "expansion_driver",
            cal.c1,
            None,
            "curvature decay C₁ (fitted, floored)",
        );
        out.constant(
            &key("c1_fitted"),
            "expansion_driver",
            cal.c1_fitted,
            None,
            "curvature decay C₁ before the floor",
        );
        out.constant(
            &key("gamma_conf"),
            "expansion_driver",
            cal.gamma_conf,
            None,
            "collar curvature constant of the completion",
        );
        out.constant(
            &key("beta"),
            "expansion_driver",
            cal.beta,
            None,
            "distortion β fitted on the first stage",
        );
        out.constant(
            &key("evolution_c"),
            "expansion_driver",
            cal.evolution_c,
            None,
            "evolution constant C of e^(−Ct)ℓ",
        );
        out.constant(
            &key("c4"),
            "expansion_driver",
            sc.constants.c4,
            None,
            "ℓ ≤ C₄α₀ factor",
        );
        out.constant(
            &key("radius_drop"),
            "expansion_driver",
            sc.radius_drop(),
            Some(1.0),
            "total radius lost over the schedule",
        );

        let inner = &run.balls[run.balls.len() - 1];
        let mut ell = Vec::new();
        for (i, st) in run.flow.stages().iter().enumerate() {
            for k in usize::from(i > 0)..=st.steps() {
                let l = run
                    .ell(i, k)
                    .iter()
                    .zip(inner)
                    .filter(|(_, a)| **a)
                    .map(|(l, _)| *l)
                    .fold(0.0, f64::max);
                ell.push((st.frame_time(k), l));
            }
        }
        let t_end = run.flow.t_end();
        out.series.push(
            Series::new(
                &format!("ell_alpha0_{alpha0}"),
                "t",
                "max ℓ on the final ball",
                ell,
            )
            .with_overlay("C₄α₀", vec![(0.0, c4a), (t_end, c4a)]),
        );
    }
    Ok(out)
}
