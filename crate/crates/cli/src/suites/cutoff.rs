use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricci_core::cutoff::{build_cutoff, fit_cutoff_exponents, verify_cutoff, CutoffParams};
use ricci_core::distortion::{
    sample_pairs, surface_benchmark, verify_distortion, DistortionOptions,
};
use ricci_core::expansion::{bump_centre, bump_surface};
use ricci_core::Result;

use super::Context;
use crate::report::{Series, SuiteOutput};

const SUITE: &str = "cutoff";
const RADIUS: f64 = 0.25;
const BUMP_SIGMA: f64 = 0.15;
const BUMP_ALPHA: f64 = 0.05;

pub fn run(ctx: &Context) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let m = 2 * ctx.cfg.resolution.m;
    let times: Vec<f64> = (1..=10).map(|k| k as f64 * 1e-3).collect();
    // A small bump keeps the centre separation r/(4e^K) above the grid spacing.
    let bench = surface_benchmark(&bump_surface(m, BUMP_SIGMA, BUMP_ALPHA)?, &times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let pairs = sample_pairs(&bench.snapshots[0].1, 20, 10, &mut rng);
    let dist = verify_distortion(
        &bench.snapshots,
        bench.k,
        bench.c0,
        &bench.gauss,
        &pairs,
        DistortionOptions::for_grid(m),
    )?;
    let x0 = bump_centre(m);

    let mut reports = Vec::new();
    for r in ctx.cfg.widths() {
        let params = CutoffParams {
            radius: RADIUS,
            width: r,
            k: bench.k,
            c0: bench.c0,
            beta: dist.beta,
        };
        let cf = build_cutoff(&bench.snapshots, x0, params)?;
        let rep = verify_cutoff(&cf, &bench.snapshots)?;
        let case = format!("bump m={m} R={RADIUS} r={r}");
        out.hard_flag(SUITE, &case, "inclusion_chain", rep.inclusion_ok);
        out.hard_flag(SUITE, &case, "range_in_unit_interval", rep.range_ok);
        out.hard_flag(SUITE, &case, "support_in_collar", rep.support_ok);
        out.info(SUITE, &case, "centers", rep.centers as f64);
        out.info(SUITE, &case, "sup_gradient", rep.sup_gradient);
        out.info(SUITE, &case, "sup_laplacian", rep.sup_laplacian);
        out.info(SUITE, &case, "sup_time_derivative", rep.sup_time_derivative);
        out.info(SUITE, &case, "kink_cells", rep.kink_cells as f64);
        out.info(SUITE, &case, "comparison_fraction", rep.comparison_fraction);
        reports.push(rep);
    }

    let ex = fit_cutoff_exponents(&reports);
    let (tg, tl, tt) = ex.target;
    let case = format!("bump m={m} R={RADIUS}");
    out.soft(
        SUITE,
        &case,
        "gradient_exponent",
        ex.gradient,
        (tg - 0.5, tg + 0.5),
    );
    out.soft(
        SUITE,
        &case,
        "laplacian_exponent",
        ex.laplacian,
        (tl - 0.5, tl + 0.5),
    );
    out.soft(
        SUITE,
        &case,
        "time_derivative_exponent",
        ex.time_derivative,
        (tt - 0.5, tt + 0.5),
    );
    out.info(
        SUITE,
        &case,
        "envelope_gradient_exponent",
        ex.envelope_gradient,
    );
    out.info(
        SUITE,
        &case,
        "envelope_laplacian_exponent",
        ex.envelope_laplacian,
    );
    out.info(
        SUITE,
        &case,
        "envelope_time_derivative_exponent",
        ex.envelope_time_derivative,
    );

    let fitted = [
        ("gradient", ex.gradient, "r-exponent of sup |∇φ|"),
        ("laplacian", ex.laplacian, "r-exponent of sup |Δφ|"),
        (
            "time_derivative",
            ex.time_derivative,
            "r-exponent of sup |∂φ/∂t|",
        ),
        (
            "envelope_gradient",
            ex.envelope_gradient,
            "r-exponent of the |∇φ| envelope",
        ),
        (
            "envelope_laplacian",
            ex.envelope_laplacian,
            "r-exponent of the |Δφ| envelope",
        ),
        (
            "envelope_time_derivative",
            ex.envelope_time_derivative,
            "r-exponent of the |∂φ/∂t| envelope",
        ),
    ];
    for (name, value, desc) in fitted {
        out.constant(
            &format!("cutoff.{name}_exponent"),
            "localization",
            value,
            Some(0.5),
            desc,
        );
    }
    out.constant(
        "cutoff.beta",
        "localization",
        dist.beta,
        None,
        "distortion constant β used by the cutoff",
    );

    let log = |f: fn(&ricci_core::cutoff::CutoffReport) -> f64| -> Vec<(f64, f64)> {
        reports
            .iter()
            .map(|r| (r.width.log10(), f(r).log10()))
            .collect()
    };
    out.series.push(
        Series::new(
            "laplacian",
            "log10 r",
            "log10 sup |Δφ|",
            log(|r| r.sup_laplacian),
        )
        .with_overlay("envelope", log(|r| r.envelope_laplacian)),
    );
    out.series.push(
        Series::new(
            "gradient",
            "log10 r",
            "log10 sup |∇φ|",
            log(|r| r.sup_gradient),
        )
        .with_overlay("envelope", log(|r| r.envelope_gradient)),
    );
    Ok(out)
}
