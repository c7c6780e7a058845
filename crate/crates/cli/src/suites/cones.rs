use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci_core::curvature::{
    cone_contains, ell, ell_bisection, ConeKind, ConeSpec, CurvatureOperator,
};
use ricci_core::Result;

use super::Context;
use crate::report::{Series, SuiteOutput};

const SUITE: &str = "cones";

/// Membership with the cone tolerance scaled by `slack`, and whether it also holds at the
/// unscaled tolerance.
fn membership(rm: &CurvatureOperator, kind: ConeKind, slack: f64) -> Result<(bool, bool)> {
    let base = ConeSpec::new(kind);
    let m = cone_contains(rm, &base.with_tol(base.tol * slack))?;
    Ok((m.inside, m.inside && (m.vacuous || m.margin >= -base.tol)))
}

pub fn run(ctx: &Context) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let samples = ctx.cfg.samples();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);

    let mut max_gap = 0.0_f64;
    let mut gaps = Vec::with_capacity(samples);
    let mut nest_violations = 0usize;
    let mut inside_counts = [0usize; 4];
    for i in 0..samples {
        let n = 3 + i % 3;
        let rm = CurvatureOperator::random(n, &mut rng)?;
        let mut worst = 0.0_f64;
        for kind in [ConeKind::NonnegOperator, ConeKind::TwoNonneg] {
            let spec = ConeSpec::new(kind).with_tol(1e-11);
            let closed = ell(&rm, &spec)?.value;
            let bisected = ell_bisection(&rm, &spec)?.value;
            let gap = (closed - bisected).abs();
            out.hard(
                SUITE,
                &format!("sample {i} (n={n})"),
                &format!("ell_gap_{}", kind.name()),
                gap,
                (0.0, 1e-8),
            );
            worst = worst.max(gap);
        }
        max_gap = max_gap.max(worst);
        gaps.push((i as f64, worst));

        // Shift halfway into the operator cone on average so both outcomes are exercised.
        let lmin = rm.eigenvalues()[0];
        let shifted = rm.shifted(rng.random::<f64>() * 2.0 * (-lmin).max(0.0));
        let (wpic2, wpic2_strict) = membership(&shifted, ConeKind::WPIC2, 10.0)?;
        let inside = [
            membership(&shifted, ConeKind::NonnegOperator, 1.0)?.0,
            membership(&shifted, ConeKind::TwoNonneg, 10.0)?.0,
            wpic2,
            membership(&shifted, ConeKind::WPIC1, 10.0)?.0,
        ];
        for (k, v) in inside.iter().enumerate() {
            inside_counts[k] += usize::from(*v);
        }
        if inside[0] && !(inside[1] && inside[2]) {
            nest_violations += 1;
        }
        if wpic2_strict && !inside[3] {
            nest_violations += 1;
        }
    }
    out.hard(SUITE, "all samples", "max_ell_gap", max_gap, (0.0, 1e-8));
    out.hard(
        SUITE,
        "all samples",
        "nesting_violations",
        nest_violations as f64,
        (0.0, 0.0),
    );
    for (k, kind) in ConeKind::ALL.iter().enumerate() {
        out.info(
            SUITE,
            "all samples",
            &format!("inside_{}", kind.name()),
            inside_counts[k] as f64,
        );
    }

    let mut mismatches = 0usize;
    let mut decided = 0usize;
    let mut signs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let rm = CurvatureOperator::random(3, &mut rng)?;
        let ev = rm.eigenvalues();
        let ell_two = (-(ev[0] + ev[1]) / 2.0).max(0.0);
        let rm = rm.shifted(rng.random::<f64>() * 2.0 * ell_two);
        let ev = rm.eigenvalues();
        let pair = ev[0] + ev[1];
        let ric = rm.min_ricci_eigenvalue();
        signs.push((pair, ric));
        if pair.abs() < 1e-9 || ric.abs() < 1e-9 {
            continue;
        }
        decided += 1;
        if (pair >= 0.0) != (ric >= 0.0) {
            mismatches += 1;
        }
    }
    signs.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.hard(
        SUITE,
        "n=3",
        "sign_mismatches",
        mismatches as f64,
        (0.0, 0.0),
    );
    out.info(SUITE, "n=3", "decided_samples", decided as f64);

    out.constant(
        "cones.max_ell_gap",
        "curvature_algebra",
        max_gap,
        Some(1e-8),
        "largest |closed-form ℓ − bisection ℓ| over the samples",
    );
    out.constant(
        "cones.nesting_violations",
        "curvature_algebra",
        nest_violations as f64,
        Some(0.0),
        "failed cone inclusions with slack 10·tol",
    );
    out.constant(
        "cones.n3_sign_mismatches",
        "curvature_algebra",
        mismatches as f64,
        Some(0.0),
        "sign disagreements of λ₁+λ₂ and min Ric in dimension 3 outside |value| < 1e-9",
    );
    out.series.push(Series::new(
        "ell_gap",
        "sample",
        "max |ℓ_closed − ℓ_bisection|",
        gaps,
    ));
    out.series
        .push(Series::new("n3_signs", "λ₁ + λ₂", "min eig Ric", signs));
    Ok(out)
}
