use ricci_core::flows::{sample_surface_flow, ConformalSurface, SurfaceScheme};
use ricci_core::grid::DiscreteManifold;
use ricci_core::heat::{forward_run, verify_kernel_properties, ExpansionFlow, KernelSample, Stage};
use ricci_core::Result;

use super::{substeps, torus_bump, Context};
use crate::report::{Series, SuiteOutput};

const SUITE: &str = "kernel";

const T_END: f64 = 2e-3;
const SOURCES: [(f64, f64); 4] = [(0.25, 0.25), (0.75, 0.25), (0.5, 0.5), (0.4, 0.3)];

fn disk(m: usize, r: f64) -> Vec<bool> {
    let man = DiscreteManifold::flat(m).expect("positive grid");
    (0..m * m)
        .map(|c| {
            let (x, y) = man.center(c);
            (x - 0.5).hypot(y - 0.5) < r
        })
        .collect()
}

fn samples(man: &DiscreteManifold, s: f64, t: f64) -> Vec<KernelSample> {
    SOURCES
        .iter()
        .map(|&(x, y)| KernelSample {
            y: man.cell_at(x, y),
            s,
            t,
        })
        .collect()
}

fn evolving_stage(
    surf: &ConformalSurface,
    t_end: f64,
    dt: f64,
) -> Result<(Stage, ConformalSurface)> {
    let steps = ((t_end - surf.t) / dt).round() as usize;
    Stage::from_surface_flow(surf, t_end, steps, substeps(surf, dt), SurfaceScheme::Rk2)
}

fn static_flat(out: &mut SuiteOutput, m: usize, dt: f64) -> Result<()> {
    let man = DiscreteManifold::flat(m)?;
    let steps = (T_END / dt).round() as usize;
    let exp = ExpansionFlow::single(Stage::static_stage(&man, None, 0.0, T_END, steps)?);
    let rep = verify_kernel_properties(&exp, &samples(&man, 0.0, T_END), &[])?;
    out.hard(
        SUITE,
        &format!("static flat m={m}"),
        "mass_deviation",
        rep.mass_deviation,
        (0.0, 1e-10),
    );
    Ok(())
}

fn evolving(out: &mut SuiteOutput, ctx: &Context) -> Result<()> {
    let (m, dt) = (ctx.cfg.resolution.m, ctx.cfg.resolution.dt);
    let amplitude = ctx.cfg.amplitude();
    let mut devs = Vec::new();
    for (mm, ddt) in [(m, dt), (2 * m, dt / 4.0)] {
        let surf = torus_bump(mm, amplitude)?;
        let (stage, _) = evolving_stage(&surf, T_END, ddt)?;
        let exp = ExpansionFlow::single(stage);
        let rep = verify_kernel_properties(&exp, &samples(&surf.manifold(), 0.0, T_END), &[])?;
        let case = format!("evolving torus m={mm} dt={ddt:e}");
        if mm == m {
            out.hard(
                SUITE,
                &case,
                "mass_deviation",
                rep.mass_deviation,
                (0.0, 5e-4),
            );
            out.hard(
                SUITE,
                &case,
                "reproduction_residual",
                rep.reproduction_residual,
                (0.0, 1e-6),
            );
            out.constant(
                "kernel.mass_deviation",
                "heat_kernel",
                rep.mass_deviation,
                Some(5e-4),
                "max |∫G − 1| on the evolving torus at the base resolution",
            );
            out.constant(
                "kernel.reproduction_residual",
                "heat_kernel",
                rep.reproduction_residual,
                Some(1e-6),
                "relative gap of direct and composed kernels in one stage",
            );
        } else {
            out.info(SUITE, &case, "mass_deviation", rep.mass_deviation);
        }
        out.hard(
            SUITE,
            &case,
            "min_value",
            rep.min_value,
            (-1e-10, f64::INFINITY),
        );
        devs.push(rep.mass_deviation);
    }
    let ratio = devs[0] / devs[1];
    out.hard(
        SUITE,
        "evolving torus refinement",
        "mass_deviation_ratio",
        ratio,
        (4.0, f64::INFINITY),
    );
    out.constant(
        "kernel.mass_refinement_ratio",
        "heat_kernel",
        ratio,
        Some(4.0),
        "mass deviation ratio under (m, dt) → (2m, dt/4)",
    );

    let surf = torus_bump(m, amplitude)?;
    let (stage, _) = evolving_stage(&surf, T_END, dt)?;
    let exp = ExpansionFlow::single(stage);
    let y = surf.manifold().cell_at(SOURCES[2].0, SOURCES[2].1);
    let mut mass = Vec::new();
    forward_run(&exp, y, 0.0, T_END, |p, f| {
        let w = exp.stages()[p.stage].weights(p.frame);
        mass.push((p.time, f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()));
    })?;
    out.series.push(
        Series::new("mass", "t", "∫G(·, t; y, 0)", mass)
            .with_overlay("exact", vec![(0.0, 1.0), (T_END, 1.0)]),
    );
    Ok(())
}

fn two_stage_junction(out: &mut SuiteOutput, ctx: &Context) -> Result<()> {
    let (m, dt) = (ctx.cfg.resolution.m, ctx.cfg.resolution.dt);
    let surf = torus_bump(m, ctx.cfg.amplitude())?;
    let (a, mid) = evolving_stage(&surf, 0.5 * T_END, dt)?;
    let (b, _) = evolving_stage(&mid.at_time(0.5 * T_END), T_END, dt)?;
    let exp = ExpansionFlow::new(vec![a, b])?;
    let rep = verify_kernel_properties(&exp, &samples(&surf.manifold(), 0.0, T_END), &[])?;
    let case = format!("identity junction m={m}");
    out.hard(
        SUITE,
        &case,
        "reproduction_residual",
        rep.reproduction_residual,
        (0.0, 5e-4),
    );
    out.hard(
        SUITE,
        &case,
        "mass_deviation",
        rep.mass_deviation,
        (0.0, 5e-4),
    );
    out.constant(
        "kernel.junction_reproduction_residual",
        "heat_kernel",
        rep.reproduction_residual,
        Some(5e-4),
        "reproduction gap through an identity junction",
    );
    Ok(())
}

fn shrinking_flat(out: &mut SuiteOutput, ctx: &Context) -> Result<f64> {
    let m = ctx.cfg.resolution.m;
    let times = [0.0, 1e-3, 2e-3, 3e-3];
    let radii = [0.45, 0.4, 0.35];
    let mut stages = Vec::new();
    for j in 0..3 {
        let man = DiscreteManifold::flat(m)?.with_mask(disk(m, radii[j]))?;
        stages.push(Stage::static_stage(&man, None, times[j], times[j + 1], 10)?);
    }
    let exp = ExpansionFlow::new(stages)?;
    let man = exp.stages()[0].manifold(0);
    let rep = verify_kernel_properties(&exp, &samples(&man, 0.0, times[3]), &[])?;
    out.hard(
        SUITE,
        &format!("static flat shrinking disks m={m}"),
        "l1_after_shrink",
        rep.l1_after_shrink,
        (0.0, 1.0 + 1e-8),
    );
    Ok(rep.l1_after_shrink)
}

struct Gaussian {
    c: Option<f64>,
    fraction: f64,
    l1: f64,
}

fn gaussian(m: usize, amplitude: f64) -> Result<Gaussian> {
    let radii = [0.45, 0.4, 0.35];
    let times = [0.01, 0.0125, 0.015625, 0.01953125];
    let start = sample_surface_flow(&torus_bump(m, amplitude)?, &[times[0]], SurfaceScheme::Rk2)?;
    let mut cur = start.into_iter().next().expect("one sample time");
    let steps = 10 * m / 32;
    let mut stages = Vec::new();
    for j in 0..3 {
        let init = cur.with_mask(disk(m, radii[j]))?;
        let dt = (times[j + 1] - times[j]) / steps as f64;
        let (st, next) = Stage::from_surface_flow(
            &init,
            times[j + 1],
            steps,
            substeps(&init, dt),
            SurfaceScheme::Rk2,
        )?;
        stages.push(st);
        cur = next;
    }
    let exp = ExpansionFlow::new(stages)?;
    let man = exp.stages()[0].manifold(0);
    let mut samples = Vec::new();
    for (x, y) in [(0.5, 0.5), (0.3, 0.5), (0.5, 0.7), (0.62, 0.41)] {
        let y = man.cell_at(x, y);
        for (s, t) in [
            (times[0], times[1]),
            (times[0], times[3]),
            (times[1], times[3]),
        ] {
            samples.push(KernelSample { y, s, t });
        }
    }
    let rep = verify_kernel_properties(&exp, &samples, &[])?;
    Ok(Gaussian {
        c: rep.gaussian_c,
        fraction: rep.gaussian_fraction,
        l1: rep.l1_after_shrink,
    })
}

fn gaussian_stability(out: &mut SuiteOutput, ctx: &Context) -> Result<f64> {
    let mut l1 = 0.0_f64;
    let m = ctx.cfg.resolution.m;
    let mut cs = Vec::new();
    for mm in [m / 2, m, 2 * m] {
        let g = gaussian(mm, ctx.cfg.amplitude())?;
        let case = format!("gaussian shrinking stages m={mm}");
        let c = g.c.unwrap_or(f64::INFINITY);
        out.info(SUITE, &case, "gaussian_c", c);
        out.hard(SUITE, &case, "gaussian_fraction", g.fraction, (1.0, 1.0));
        out.hard(SUITE, &case, "l1_after_shrink", g.l1, (0.0, 1.0 + 1e-8));
        l1 = l1.max(g.l1);
        cs.push((mm as f64, c));
    }
    for w in cs.windows(2) {
        let ratio = w[1].1 / w[0].1;
        out.hard(
            SUITE,
            &format!("gaussian m={} vs m={}", w[0].0, w[1].0),
            "gaussian_c_ratio",
            ratio,
            (0.8, 1.2),
        );
    }
    out.constant(
        "kernel.gaussian_c",
        "heat_kernel",
        cs[1].1,
        Some(0.2),
        "Gaussian upper bound constant C at the base resolution (relative stability tolerance)",
    );
    out.series.push(Series::new("gaussian_c", "m", "C", cs));
    Ok(l1)
}

pub fn run(ctx: &Context) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    static_flat(&mut out, ctx.cfg.resolution.m, ctx.cfg.resolution.dt)?;
    evolving(&mut out, ctx)?;
    two_stage_junction(&mut out, ctx)?;
    let l1 = shrinking_flat(&mut out, ctx)?.max(gaussian_stability(&mut out, ctx)?);
    out.constant(
        "kernel.l1_after_shrink",
        "heat_kernel",
        l1,
        Some(1.0 + 1e-8),
        "max ∫G after a mask shrink",
    );
    Ok(out)
}
