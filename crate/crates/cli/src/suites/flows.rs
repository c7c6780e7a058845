use ricci_core::curvature::{ell, ConeKind, ConeSpec};
use ricci_core::fit::log_log_slope;
use ricci_core::flows::{
    integrate_homogeneous, integrate_surface, verify_apriori_bounds, ConformalSurface, FlowRecord,
    MilnorState, SurfaceScheme,
};
use ricci_core::Result;

use super::{torus_bump, Context};
use crate::report::{Series, SuiteOutput};

const SUITE: &str = "flows";

/// Bound on the fitted evolution constant of the Berger flow.
const EVOLUTION_C_MAX: f64 = 50.0;
/// `C₄` of the bump benchmarks.
const C4: f64 = 2.0;

fn rel_err(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| ((a[i] - b[i]) / b[i]).abs())
        .fold(0.0, f64::max)
}

fn round_sphere(out: &mut SuiteOutput) -> Result<()> {
    let (dt, steps) = (2e-3, 100);
    let mut worst = 0.0_f64;
    let mut s = MilnorState::round();
    for _ in 0..steps {
        s = integrate_homogeneous(&s, dt, 1)?;
        let scale = 1.0 - 4.0 * s.t;
        worst = worst.max(rel_err(s.g, [scale; 3]));
    }
    out.hard(
        SUITE,
        "round S3, dt=2e-3",
        "max_rel_error_vs_space_form",
        worst,
        (0.0, 1e-6),
    );
    out.constant(
        "flows.round_rel_error",
        "model_flows",
        worst,
        Some(1e-6),
        "max relative error of RK4 round S³ against the exact space-form flow over 100 steps",
    );
    Ok(())
}

fn berger_order(out: &mut SuiteOutput) -> Result<()> {
    let init = MilnorState::berger(2.1)?;
    let t = 0.1;
    let reference = integrate_homogeneous(&init, t / 5120.0, 5120)?;
    let mut dts = Vec::new();
    let mut errs = Vec::new();
    for n in [5usize, 10, 20, 40] {
        let s = integrate_homogeneous(&init, t / n as f64, n)?;
        dts.push(t / n as f64);
        errs.push(rel_err(s.g, reference.g));
    }
    let slope = log_log_slope(&dts, &errs);
    out.hard(
        SUITE,
        "Berger a=2.1, T=0.1",
        "rk4_order_slope",
        slope,
        (3.8, 4.2),
    );
    out.constant(
        "flows.rk4_order",
        "model_flows",
        slope,
        Some(0.2),
        "observed order of the homogeneous RK4 integrator on a Berger sphere",
    );
    out.series.push(Series::new(
        "rk4_convergence",
        "dt",
        "relative error",
        dts.into_iter().zip(errs).collect(),
    ));
    Ok(())
}

fn doubling(out: &mut SuiteOutput, ctx: &Context) -> Result<()> {
    let cone = ConeSpec::new(ConeKind::NonnegOperator);
    let mut records: Vec<(String, FlowRecord)> = Vec::new();
    for (n, k0) in [(3usize, 1.0_f64), (4, 1.0), (3, -1.0), (5, -0.5)] {
        let window = 1.0 / (16.0 * k0.abs());
        let times: Vec<f64> = (0..=64).map(|k| window * k as f64 / 64.0).collect();
        records.push((
            format!("space form n={n} K0={k0}"),
            FlowRecord::space_form(n, k0, &times)?,
        ));
    }
    for a in [0.5, 2.1, 3.0] {
        let init = MilnorState::berger(a)?;
        let k = init.curvature_operator().norm();
        let dt = 1.0 / (16.0 * k) / 200.0;
        records.push((
            format!("Berger a={a}"),
            FlowRecord::homogeneous(&init, dt, 200, 1)?,
        ));
    }
    let m = ctx.cfg.resolution.m;
    let surf = torus_bump(m, ctx.cfg.amplitude())?;
    let k = surf
        .gauss_curvature()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let window = 1.0 / (16.0 * k);
    let steps = (window / (0.5 * surf.dt_bound())).ceil() as usize;
    records.push((
        format!("torus bump m={m}"),
        FlowRecord::surface(&surf, window / steps as f64, steps, 1, SurfaceScheme::Rk2)?,
    ));
    let mut worst = 0.0_f64;
    for (case, rec) in &records {
        let k = rec.curvature()[0].sup_norm();
        let rep = verify_apriori_bounds(rec, &cone, k, rec.times()[rec.len() - 1])?;
        let ratio = rec
            .times()
            .iter()
            .zip(rec.curvature())
            .filter(|(t, _)| **t <= 1.0 / (16.0 * k))
            .map(|(_, f)| f.sup_norm() / k)
            .fold(0.0, f64::max);
        worst = worst.max(ratio);
        out.hard(SUITE, case, "doubling_ratio", ratio, (0.0, 2.0));
        out.hard(
            SUITE,
            case,
            "doubling_violations",
            rep.doubling_violations.len() as f64,
            (0.0, 0.0),
        );
    }
    out.constant(
        "flows.max_doubling_ratio",
        "model_flows",
        worst,
        Some(2.0),
        "max sup|Rm(t)|/K for t ≤ 1/(16K) over all model flows",
    );
    Ok(())
}

fn flat_is_stationary(out: &mut SuiteOutput, ctx: &Context) -> Result<()> {
    let m = ctx.cfg.resolution.m;
    let flat = ConformalSurface::flat(m)?;
    let dt = 0.5 * flat.dt_bound();
    let mut cur = flat;
    let mut series = vec![(0.0, 0.0)];
    for _ in 0..100 {
        cur = integrate_surface(&cur, dt, 1, SurfaceScheme::Rk2)?;
        series.push((cur.t, cur.u().iter().map(|u| u.abs()).fold(0.0, f64::max)));
    }
    let drift = series.iter().map(|p| p.1).fold(0.0, f64::max);
    out.series
        .push(Series::new("flat_torus", "t", "max |u|", series));
    out.hard(
        SUITE,
        &format!("flat torus m={m}"),
        "max_abs_u_after_100_steps",
        drift,
        (0.0, 0.0),
    );
    Ok(())
}

fn berger_ell(out: &mut SuiteOutput) -> Result<()> {
    let cone = ConeSpec::new(ConeKind::NonnegOperator);
    // ℓ(0) = 3a − 4 on the Berger sphere (a, 1, 1).
    let alpha0 = 0.1;
    let init = MilnorState::berger((4.0 + alpha0) / 3.0)?;
    let ell0 = ell(&init.curvature_operator(), &cone)?.value;
    let tau = 0.05;
    let rec = FlowRecord::homogeneous(&init, tau / 500.0, 500, 5)?;
    let rep = verify_apriori_bounds(&rec, &cone, init.curvature_operator().norm(), tau)?;
    let c4 = rep.c4.unwrap_or(0.0);
    out.info(SUITE, "Berger alpha0=0.1", "ell0", ell0);
    out.hard(SUITE, "Berger alpha0=0.1", "c4_ratio", c4, (0.0, C4));
    let evo = rep.evolution_c.unwrap_or(0.0);
    out.hard(
        SUITE,
        "Berger alpha0=0.1",
        "evolution_c",
        evo,
        (0.0, EVOLUTION_C_MAX),
    );
    out.info(
        SUITE,
        "Berger alpha0=0.1",
        "decay_constant",
        rep.decay_constant,
    );
    out.constant(
        "flows.berger_c4",
        "model_flows",
        c4,
        Some(C4),
        "max ℓ(t)/ℓ(0) on the Berger flow with ℓ(0) = 0.1",
    );
    out.constant(
        "flows.berger_evolution_c",
        "model_flows",
        evo,
        Some(EVOLUTION_C_MAX),
        "fitted C in ∂ℓ/∂t ≤ scal·ℓ + Cℓ² on the Berger flow",
    );
    let line: Vec<(f64, f64)> = [0.0, tau].iter().map(|t| (*t, C4 * ell0)).collect();
    out.series
        .push(Series::new("berger_ell", "t", "ℓ(t)", rep.ell_series).with_overlay("C₄α₀", line));
    Ok(())
}

pub fn run(ctx: &Context) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    round_sphere(&mut out)?;
    berger_order(&mut out)?;
    doubling(&mut out, ctx)?;
    flat_is_stationary(&mut out, ctx)?;
    berger_ell(&mut out)?;
    Ok(out)
}
