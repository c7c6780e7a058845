use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{step_conformal_surface_flow, ConformalSurface, SurfaceScheme};
use crate::grid::DiscreteManifold;

/// Metric and scalar curvature of a stage at one kernel time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub phi: Vec<f64>,
    pub scal: Vec<f64>,
}

/// One flow of a flow-in-expansion: a fixed domain mask and metric frames on `[t_start, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub t_start: f64,
    pub t_end: f64,
    m: usize,
    mask: Vec<bool>,
    frames: Vec<Frame>,
}

impl Stage {
    /// Stage from explicit frames, equally spaced in time.
    pub fn from_frames(
        m: usize,
        mask: Vec<bool>,
        t_start: f64,
        t_end: f64,
        frames: Vec<Frame>,
    ) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(Error::InvalidInput(format!(
                "stage interval [{t_start}, {t_end}] is empty"
            )));
        }
        if frames.len() < 2 {
            return Err(Error::InvalidInput(
                "a stage needs at least one time step".into(),
            ));
        }
        if mask.len() != m * m || !mask.iter().any(|a| *a) {
            return Err(Error::InvalidInput(
                "stage mask must be a nonempty m×m field".into(),
            ));
        }
        for f in &frames {
            if f.phi.len() != m * m || f.scal.len() != m * m {
                return Err(Error::DimensionMismatch {
                    expected: m * m,
                    got: f.phi.len().min(f.scal.len()),
                });
            }
            if f.phi.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                return Err(Error::InvalidInput("stage metric must be positive".into()));
            }
        }
        Ok(Self {
            t_start,
            t_end,
            m,
            mask,
            frames,
        })
    }

    /// Time-independent metric with zero scalar curvature unless `scal` is given.
    pub fn static_stage(
        man: &DiscreteManifold,
        scal: Option<Vec<f64>>,
        t_start: f64,
        t_end: f64,
        steps: usize,
    ) -> Result<Self> {
        let scal = scal.unwrap_or_else(|| vec![0.0; man.len()]);
        let frame = Frame {
            phi: man.factor().to_vec(),
            scal,
        };
        Self::from_frames(
            man.m(),
            man.mask().to_vec(),
            t_start,
            t_end,
            vec![frame; steps + 1],
        )
    }

    /// Frames sampled from the conformal surface flow started at `initial` (at `initial.t`),
    /// with `substeps` explicit flow steps per kernel step. Returns the stage and the final surface.
    pub fn from_surface_flow(
        initial: &ConformalSurface,
        t_end: f64,
        steps: usize,
        substeps: usize,
        scheme: SurfaceScheme,
    ) -> Result<(Self, ConformalSurface)> {
        if steps == 0 || substeps == 0 {
            return Err(Error::InvalidInput(
                "steps and substeps must be positive".into(),
            ));
        }
        let t_start = initial.t;
        let dt = (t_end - t_start) / (steps * substeps) as f64;
        let frame_of = |s: &ConformalSurface| Frame {
            phi: s.u().iter().map(|u| u.exp()).collect(),
            scal: s.gauss_curvature().iter().map(|k| 2.0 * k).collect(),
        };
        let mut frames = vec![frame_of(initial)];
        let mut cur = initial.clone();
        for k in 1..=steps {
            for _ in 0..substeps {
                cur = step_conformal_surface_flow(&cur, dt, scheme)?;
            }
            cur.t = t_start + (t_end - t_start) * k as f64 / steps as f64;
            frames.push(frame_of(&cur));
        }
        let stage =
            Self::from_frames(initial.m(), initial.mask().to_vec(), t_start, t_end, frames)?;
        Ok((stage, cur))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn steps(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps() as f64
    }

    pub fn frame(&self, k: usize) -> &Frame {
        &self.frames[k]
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        if k == self.steps() {
            self.t_end
        } else {
            self.t_start + self.dt() * k as f64
        }
    }

    /// Index of the frame at time `t`; `t` must lie on the step grid up to `10⁻⁶·dt`.
    pub fn frame_index(&self, t: f64) -> Result<usize> {
        let x = (t - self.t_start) / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.steps() as f64 || (x - k).abs() > 1e-6 {
            return Err(Error::OutOfDomain {
                t,
                reason: format!("not a step time of [{}, {}]", self.t_start, self.t_end),
            });
        }
        Ok(k as usize)
    }

    /// Cell volumes `φh²` at frame `k`, zero off the mask.
    pub fn weights(&self, k: usize) -> Vec<f64> {
        let h2 = self.h() * self.h();
        self.frames[k]
            .phi
            .iter()
            .zip(&self.mask)
            .map(|(p, a)| if *a { p * h2 } else { 0.0 })
            .collect()
    }

    pub fn manifold(&self, k: usize) -> DiscreteManifold {
        DiscreteManifold::with_factor(self.m, self.frames[k].phi.clone())
            .and_then(|man| man.with_mask(self.mask.clone()))
            .expect("stage frames are validated")
    }
}

/// A sequence of stages on nested domains with shared junction times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFlow {
    stages: Vec<Stage>,
    /// Per junction: whether `g_{j+1}(t_{j+1}) ≥ g_j(t_{j+1})` on `M_{j+1}`.
    pub junction_expanding: Vec<bool>,
}

impl ExpansionFlow {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidInput(
                "an expansion flow needs a stage".into(),
            ));
        }
        let mut junction_expanding = Vec::new();
        for w in stages.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.m != b.m {
                return Err(Error::InvalidInput("stages must share the grid".into()));
            }
            if a.t_end != b.t_start {
                return Err(Error::InvalidInput(format!(
                    "stage ends at {} but next starts at {}",
                    a.t_end, b.t_start
                )));
            }
            if b.mask.iter().zip(&a.mask).any(|(nb, na)| *nb && !*na) {
                return Err(Error::InvalidInput("stage masks must be nested".into()));
            }
            let before = &a.frames[a.steps()].phi;
            let after = &b.frames[0].phi;
            junction_expanding.push((0..before.len()).all(|c| !b.mask[c] || after[c] >= before[c]));
        }
        Ok(Self {
            stages,
            junction_expanding,
        })
    }

    pub fn single(stage: Stage) -> Self {
        Self {
            stages: vec![stage],
            junction_expanding: Vec::new(),
        }
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn t_start(&self) -> f64 {
        self.stages[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.stages[self.stages.len() - 1].t_end
    }

    /// Ratio `t_{j+1}/t_j` of the junction times when it is constant to `10⁻¹²`.
    pub fn ratio(&self) -> Option<f64> {
        let times: Vec<f64> = self
            .stages
            .iter()
            .map(|s| s.t_start)
            .chain([self.t_end()])
            .collect();
        if times[0] <= 0.0 {
            return None;
        }
        let nu = times[1] / times[0];
        times
            .windows(2)
            .all(|w| (w[1] / w[0] - nu).abs() <= 1e-12 * nu)
            .then_some(nu)
    }

    /// Stage holding a source time: the last one starting at or before `s`.
    pub fn source_stage(&self, s: f64) -> Result<usize> {
        if s < self.t_start() || s >= self.t_end() {
            return Err(Error::OutOfDomain {
                t: s,
                reason: "source time outside the flow".into(),
            });
        }
        Ok(self
            .stages
            .iter()
            .rposition(|st| st.t_start <= s)
            .expect("s ≥ t_start"))
    }

    /// Stage holding an evaluation time: the first one with `t_start < t ≤ t_end`.
    pub fn eval_stage(&self, t: f64) -> Result<usize> {
        self.stages
            .iter()
            .position(|st| st.t_start < t && t <= st.t_end)
            .ok_or_else(|| Error::OutOfDomain {
                t,
                reason: "evaluation time outside the flow".into(),
            })
    }
}
