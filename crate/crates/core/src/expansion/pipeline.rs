use serde::{Deserialize, Serialize};

use super::completion::{collar_curvature_constant, conformal_completion_with, CompletionProfile};
use super::schedule::{plan_schedule, ExpansionSchedule, ScheduleConstants};
use crate::curvature::ConeSpec;
use crate::distortion::{verify_distortion, DistortionOptions};
use crate::error::{Error, Result};
use crate::flows::{
    verify_apriori_bounds_with, AprioriOptions, ConformalSurface, CurvatureField, FlowKind,
    FlowRecord, FlowState, SurfaceScheme,
};
use crate::grid::{integrate, metric_ball, DiscreteManifold};
use crate::heat::{ExpansionFlow, Stage};

/// Desk-scale parameters of a full expansion run on the `m×m` torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub m: usize,
    pub alpha0: f64,
    /// Width of the hyperbolic bump.
    pub bump_sigma: f64,
    /// Expansion stages after the initial full-torus stage.
    pub stages: usize,
    /// First junction time on the grid.
    pub t1: f64,
    /// First junction time in schedule units.
    pub t1_schedule: f64,
    /// Radius of the first stage domain on the grid.
    pub radius_start: f64,
    /// Grid length per schedule length unit for the radius ledger.
    pub length_scale: f64,
    /// Grid length per `t^{1/4}` schedule unit for the localization width.
    pub width_scale: f64,
    pub initial_steps: usize,
    pub kernel_steps: usize,
    pub c1_floor: f64,
    pub c4: f64,
    pub profile: CompletionProfile,
    pub scheme: SurfaceScheme,
    /// Abort on the first audit failure instead of reporting it.
    pub strict: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m: 128,
            alpha0: 0.05,
            bump_sigma: 0.05,
            stages: 5,
            t1: 4e-4,
            t1_schedule: 1e-7,
            radius_start: 0.45,
            length_scale: 0.05,
            width_scale: 2.0,
            initial_steps: 20,
            kernel_steps: 4,
            c1_floor: 1.0,
            c4: 2.0,
            profile: CompletionProfile::default(),
            scheme: SurfaceScheme::Rk2,
            strict: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidInput(s.to_string()));
        if self.m < 8 {
            return bad("grid size must be at least 8");
        }
        if !(self.alpha0 >= 0.0 && self.bump_sigma > 0.0) {
            return bad("α₀ must be nonnegative and the bump width positive");
        }
        if self.stages == 0 || self.initial_steps == 0 || self.kernel_steps == 0 {
            return bad("stage and step counts must be positive");
        }
        if !(self.t1 > 0.0 && self.t1_schedule > 0.0) {
            return bad("junction times must be positive");
        }
        if !(self.radius_start > 0.0 && self.radius_start < 0.5) {
            return bad("starting radius must lie in (0, 1/2)");
        }
        if !(self.length_scale >= 0.0
            && self.width_scale > 0.0
            && self.c1_floor > 0.0
            && self.c4 >= 1.0)
        {
            return bad("scales must be positive and C₄ ≥ 1");
        }
        Ok(())
    }
}

/// `u₀ = −a·exp(−|x − x₀|²/(2σ²))` centred on the middle cell, with `a` chosen so that
/// `max ℓ(·, 0) = α₀` on the grid.
pub fn bump_surface(m: usize, sigma: f64, alpha0: f64) -> Result<ConformalSurface> {
    let h = 1.0 / m as f64;
    let c = (m / 2) as f64 * h + 0.5 * h;
    let shape = |a: f64| {
        ConformalSurface::from_fn(m, |x, y| {
            let r2 = (x - c).powi(2) + (y - c).powi(2);
            -a * (-r2 / (2.0 * sigma * sigma)).exp()
        })
    };
    if alpha0 == 0.0 {
        return shape(0.0);
    }
    let peak = |s: &ConformalSurface| s.gauss_curvature().iter().map(|k| -k).fold(0.0, f64::max);
    let mut hi = alpha0 * sigma * sigma;
    while peak(&shape(hi)?) < alpha0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if peak(&shape(mid)?) < alpha0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shape(hi)
}

/// Centre cell of [`bump_surface`].
pub fn bump_centre(m: usize) -> usize {
    (m / 2) * m + m / 2
}

/// Constants fitted on the full-torus stage `[0, t₁]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c1_fitted: f64,
    pub c1: f64,
    pub gamma_conf: f64,
    pub beta: f64,
    /// Ricci lower bound `max(−K)`.
    pub k: f64,
    /// Evolution constant `C` of `ℒ = e^{−Ct}ℓ`.
    pub evolution_c: f64,
    pub v0: f64,
    pub tau: f64,
    /// Grid time per schedule time unit.
    pub time_scale: f64,
}

/// Audit of one expansion stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAudit {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub rho: f64,
    pub radius: f64,
    pub cells: usize,
    pub apa1: bool,
    /// `max |K|·t/C₃` over the stage.
    pub apa2_ratio: f64,
    pub apa2: bool,
    /// `max ℓ` over the scheduled ball.
    pub apa3_ell: f64,
    pub apa3: bool,
    pub junction: bool,
    /// `16·(t_end − t_start)·sup|K(t_start)|`; at most 1 within the doubling window.
    pub doubling_ratio: f64,
    /// Unit-area ratio `vol B(x₀, ϱ)/(πϱ²)` at the stage end.
    pub volume_ratio: f64,
    pub failure: Option<String>,
}

/// A full run: schedule, stages, audits and the data the estimate checks need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRun {
    pub schedule: ExpansionSchedule,
    pub calibration: Calibration,
    pub flow: ExpansionFlow,
    pub x0: usize,
    pub alpha0: f64,
    pub width_scale: f64,
    /// Grid junction times `T_j = σ·t_j` for the stages run (`T₀ = 0`).
    pub times: Vec<f64>,
    pub audits: Vec<StageAudit>,
    /// Scheduled balls per expansion stage: cells at least `2ρ + max(ρ, 10h)` from the domain boundary.
    pub balls: Vec<Vec<bool>>,
    pub passed: bool,
}

impl ExpansionRun {
    /// `ℓ` over the active cells of a stage frame.
    pub fn ell(&self, stage: usize, frame: usize) -> Vec<f64> {
        let st = &self.flow.stages()[stage];
        let mask = st.mask();
        st.frame(frame)
            .scal
            .iter()
            .zip(mask)
            .map(|(s, a)| if *a { (-0.5 * s).max(0.0) } else { 0.0 })
            .collect()
    }

    /// `max ℓ` over every frame inside the final scheduled ball.
    pub fn max_ell(&self) -> f64 {
        let inner = &self.balls[self.balls.len() - 1];
        let mut best = 0.0_f64;
        for (i, st) in self.flow.stages().iter().enumerate() {
            for k in 0..=st.steps() {
                let l = self.ell(i, k);
                best = l
                    .iter()
                    .zip(inner)
                    .filter(|(_, a)| **a)
                    .map(|(l, _)| *l)
                    .fold(best, f64::max);
            }
        }
        best
    }
}

fn substeps_for(s: &ConformalSurface, dt: f64) -> usize {
    (dt / (0.5 * s.dt_bound())).ceil().max(1.0) as usize
}

fn surface_of(m: usize, phi: &[f64], mask: &[bool], t: f64) -> Result<ConformalSurface> {
    Ok(
        ConformalSurface::new(m, phi.iter().map(|p| p.ln()).collect())?
            .with_mask(mask.to_vec())?
            .at_time(t),
    )
}

fn volume_ratio(man: &DiscreteManifold, x0: usize, r: f64) -> Result<f64> {
    let ball = metric_ball(man, x0, r)?;
    Ok(integrate(&vec![1.0; man.len()], man, &ball)? / (std::f64::consts::PI * r * r))
}

/// Fits the run constants on the full-torus stage and plans the schedule.
pub fn calibrate(
    cfg: &PipelineConfig,
    initial: &ConformalSurface,
    cone: &ConeSpec,
) -> Result<(Calibration, Stage)> {
    let dt0 = cfg.t1 / cfg.initial_steps as f64;
    let (stage0, _) = Stage::from_surface_flow(
        initial,
        cfg.t1,
        cfg.initial_steps,
        substeps_for(initial, dt0),
        cfg.scheme,
    )?;
    let m = cfg.m;
    let x0 = bump_centre(m);
    let mut rec = FlowRecord::new(
        FlowKind::ConformalSurface,
        dt0,
        serde_json::json!({ "m": m, "stage": 0 }),
    );
    let mut snaps = Vec::new();
    let mut gauss = Vec::new();
    let mut c1_fitted = 0.0_f64;
    let mut k = 0.0_f64;
    for f in 0..=stage0.steps() {
        let t = stage0.frame_time(f);
        let s = surface_of(m, &stage0.frame(f).phi, stage0.mask(), t)?;
        let kk = s.gauss_curvature();
        if t > 0.0 {
            c1_fitted = c1_fitted.max(t * kk.iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
        k = kk.iter().map(|v| -v).fold(k, f64::max);
        snaps.push((t, s.manifold()));
        gauss.push(kk);
        rec.push(FlowState::Surface(s))?;
    }
    let c1 = c1_fitted.max(cfg.c1_floor);
    let apriori = verify_apriori_bounds_with(
        &rec,
        cone,
        k.max(1e-12),
        cfg.t1,
        AprioriOptions {
            ell_floor: 1e-12,
            relative_floor: 1e-3,
        },
    )?;
    let evolution_c = apriori.evolution_c.unwrap_or(0.0);
    let targets: Vec<usize> = (1..=10).map(|j| x0 + j * (m / 32).max(1)).collect();
    let pairs: Vec<(usize, usize)> = targets.iter().map(|&y| (x0, y)).collect();
    let dist = verify_distortion(
        &snaps,
        k,
        c1,
        &gauss,
        &pairs,
        DistortionOptions::for_grid(m),
    )?;
    let end = &snaps[snaps.len() - 1].1;
    let rho1 = (cfg.t1 / c1).sqrt();
    let u1: Vec<bool> =
        metric_ball(end, x0, cfg.radius_start)?
            .into_iter()
            .fold(vec![false; m * m], |mut v, c| {
                v[c] = true;
                v
            });
    let comp = conformal_completion_with(end, &u1, rho1, cfg.profile)?;
    let gamma_conf = collar_curvature_constant(&comp)?;
    let v0 = volume_ratio(&snaps[0].1, x0, 0.05)?;
    let c3 = 4.0 * gamma_conf * c1;
    let mut tau = 1.0_f64.min(c1 / 4.0);
    if dist.beta > 0.0 {
        tau = tau.min(1.0 / (256.0 * dist.beta.powi(4) * c3 * c3));
    }
    let cal = Calibration {
        c1_fitted,
        c1,
        gamma_conf,
        beta: dist.beta,
        k,
        evolution_c,
        v0,
        tau,
        time_scale: cfg.t1 / cfg.t1_schedule,
    };
    Ok((cal, stage0))
}

/// Plans the schedule for a calibration.
pub fn schedule_for(cfg: &PipelineConfig, cal: &Calibration) -> Result<ExpansionSchedule> {
    let consts = ScheduleConstants {
        c1: cal.c1,
        gamma_conf: cal.gamma_conf,
        c4: cfg.c4,
        tau: cal.tau,
        alpha0: cfg.alpha0,
        v0: cal.v0,
        k: cal.k,
        beta: cal.beta,
    };
    plan_schedule(consts, cfg.t1_schedule, 0.0)
}

/// Runs the expansion stages after the calibrated full-torus stage.
pub fn run_expansion(
    cfg: &PipelineConfig,
    cal: &Calibration,
    stage0: Stage,
    sched: &ExpansionSchedule,
    cone: &ConeSpec,
) -> Result<ExpansionRun> {
    let m = cfg.m;
    let h = 1.0 / m as f64;
    if sched.len() < cfg.stages + 2 {
        return Err(Error::Configuration(format!(
            "schedule has {} junctions; {} stages need {}",
            sched.len(),
            cfg.stages,
            cfg.stages + 2
        )));
    }
    let x0 = bump_centre(m);
    let mut times: Vec<f64> = std::iter::once(0.0)
        .chain(
            sched
                .t_seq
                .iter()
                .take(cfg.stages + 1)
                .map(|t| t * cal.time_scale),
        )
        .collect();
    times[1] = stage0.t_end;
    let c3 = sched.c3;
    let bound3 = cfg.c4 * cfg.alpha0;
    let last = stage0.steps();
    let mut cur = surface_of(m, &stage0.frame(last).phi, stage0.mask(), times[1])?;
    let mut stages = vec![stage0];
    let mut audits = Vec::new();
    let mut balls = Vec::new();
    let mut radius = cfg.radius_start;
    let mut passed = true;
    for j in 1..=cfg.stages {
        let (t0, t1) = (times[j], times[j + 1]);
        let rho = (t0 / cal.c1).sqrt();
        if j > 1 {
            radius -=
                cfg.length_scale * (sched.r_seq[j - 2] - sched.r_seq[j - 1]) + 2.0 * rho + 2.0 * h;
        }
        if radius <= 2.0 * rho {
            return Err(Error::Configuration(format!(
                "stage {j}: radius {radius:.4} leaves no interior"
            )));
        }
        let man = cur.manifold();
        let mut region = vec![false; m * m];
        for c in metric_ball(&man, x0, radius)? {
            region[c] = true;
        }
        let comp = conformal_completion_with(&man, &region, rho, cfg.profile)?;
        let junction =
            (0..m * m).all(|c| !region[c] || comp.manifold.factor()[c] >= man.factor()[c]);
        let next = surface_of(m, comp.manifold.factor(), &region, t0)?;
        let sup0 = next
            .gauss_curvature()
            .iter()
            .zip(&region)
            .filter(|(_, a)| **a)
            .map(|(k, _)| k.abs())
            .fold(0.0, f64::max);
        let doubling_ratio = 16.0 * (t1 - t0) * sup0;
        let dt = (t1 - t0) / cfg.kernel_steps as f64;
        let flowed = Stage::from_surface_flow(
            &next,
            t1,
            cfg.kernel_steps,
            substeps_for(&next, dt),
            cfg.scheme,
        );
        let ball = comp.inner(rho.max(10.0 * h));
        let mut audit = StageAudit {
            index: j,
            t_start: t0,
            t_end: t1,
            rho,
            radius,
            cells: region.iter().filter(|a| **a).count(),
            apa1: false,
            apa2_ratio: f64::INFINITY,
            apa2: false,
            apa3_ell: f64::INFINITY,
            apa3: false,
            junction,
            doubling_ratio,
            volume_ratio: f64::NAN,
            failure: None,
        };
        let (stage, end) = match flowed {
            Ok(x) => x,
            Err(e) => {
                audit.failure = Some(format!("APA 1 at stage {j}: {e}"));
                audits.push(audit);
                return Err(Error::Hypothesis(format!("APA 1 fails at stage {j}: {e}")));
            }
        };
        audit.apa1 = (0..=stage.steps()).all(|k| stage.frame(k).phi.iter().all(|p| p.is_finite()));
        let mut ratio = 0.0_f64;
        let mut worst2 = 0;
        let mut ell3 = 0.0_f64;
        let mut worst3 = 0;
        for k in 0..=stage.steps() {
            let t = stage.frame_time(k);
            let ell = frame_curvature(&stage, k).ell_values(cone)?;
            for (c, s) in stage.frame(k).scal.iter().enumerate() {
                if !region[c] {
                    continue;
                }
                let r = 0.5 * s.abs() * t / c3;
                if r > ratio {
                    ratio = r;
                    worst2 = c;
                }
                if ball[c] && ell[c] > ell3 {
                    ell3 = ell[c];
                    worst3 = c;
                }
            }
        }
        audit.apa2_ratio = ratio;
        audit.apa2 = ratio <= 1.0;
        audit.apa3_ell = ell3;
        audit.apa3 = ell3 <= bound3 * (1.0 + 1e-12);
        audit.volume_ratio = volume_ratio(&end.manifold(), x0, 0.05_f64.min(0.5 * radius))?;
        audit.failure = if !audit.apa1 {
            Some(format!("APA 1 at stage {j}: non-finite metric"))
        } else if !audit.apa2 {
            Some(format!(
                "APA 2 at stage {j}, cell {worst2}: |K|t/C₃ = {ratio:.4}"
            ))
        } else if !audit.apa3 {
            Some(format!(
                "APA 3 at stage {j}, cell {worst3}: ℓ = {ell3:.4e} > C₄α₀ = {bound3:.4e}"
            ))
        } else if !audit.junction {
            Some(format!(
                "junction at stage {j}: completed metric below the previous one"
            ))
        } else {
            None
        };
        if let Some(f) = &audit.failure {
            passed = false;
            if cfg.strict {
                return Err(Error::Hypothesis(f.clone()));
            }
        }
        audits.push(audit);
        balls.push(ball);
        stages.push(stage);
        cur = end;
    }
    let flow = ExpansionFlow::new(stages)?;
    passed &= flow.junction_expanding.iter().all(|j| *j);
    let mut schedule = sched.clone();
    schedule.eta0 = Some(
        audits
            .iter()
            .map(|a| a.volume_ratio / cal.v0)
            .fold(f64::INFINITY, f64::min),
    );
    Ok(ExpansionRun {
        schedule,
        calibration: cal.clone(),
        flow,
        x0,
        alpha0: cfg.alpha0,
        width_scale: cfg.width_scale,
        times,
        audits,
        balls,
        passed,
    })
}

/// Bump initial data, calibration, schedule and stages in one call.
pub fn run_pipeline(cfg: &PipelineConfig, cone: &ConeSpec) -> Result<ExpansionRun> {
    cfg.validate()?;
    let initial = bump_surface(cfg.m, cfg.bump_sigma, cfg.alpha0)?;
    let (cal, stage0) = calibrate(cfg, &initial, cone)?;
    let sched = schedule_for(cfg, &cal)?;
    run_expansion(cfg, &cal, stage0, &sched, cone)
}

/// Gauss curvature field of a stage frame, in the form the flow audits use.
pub fn frame_curvature(stage: &Stage, k: usize) -> CurvatureField {
    CurvatureField::Gauss {
        k: stage.frame(k).scal.iter().map(|s| 0.5 * s).collect(),
        mask: stage.mask().to_vec(),
    }
}
