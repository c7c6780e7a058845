use serde::{Deserialize, Serialize};

use super::homogeneous::{step_homogeneous_flow, MilnorState};
use super::space_form::{exact_space_form_flow, SpaceFormState};
use super::surface::{step_conformal_surface_flow, ConformalSurface, SurfaceScheme};
use crate::curvature::{ell, ConeSpec, CurvatureOperator};
use crate::error::{Error, Result};
use crate::grid::DiscreteManifold;
use crate::io::{csv_record, format_sig17};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowKind {
    SpaceForm,
    Homogeneous3,
    ConformalSurface,
}

/// Metric data of a model flow at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FlowState {
    SpaceForm(SpaceFormState),
    Homogeneous(MilnorState),
    Surface(ConformalSurface),
}

impl FlowState {
    pub fn kind(&self) -> FlowKind {
        match self {
            FlowState::SpaceForm(_) => FlowKind::SpaceForm,
            FlowState::Homogeneous(_) => FlowKind::Homogeneous3,
            FlowState::Surface(_) => FlowKind::ConformalSurface,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            FlowState::SpaceForm(s) => s.t,
            FlowState::Homogeneous(s) => s.t,
            FlowState::Surface(s) => s.t,
        }
    }
}

/// Curvature of a state: one operator for homogeneous models, a Gauss-curvature field on grids.
#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureField {
    Uniform(CurvatureOperator),
    Gauss { k: Vec<f64>, mask: Vec<bool> },
}

impl CurvatureField {
    /// `sup |Rm|` (operator norm; `|K|` on surfaces).
    pub fn sup_norm(&self) -> f64 {
        match self {
            CurvatureField::Uniform(op) => op.norm(),
            CurvatureField::Gauss { k, mask } => k
                .iter()
                .zip(mask)
                .filter(|(_, a)| **a)
                .map(|(v, _)| v.abs())
                .fold(0.0, f64::max),
        }
    }

    /// `ℓ` per point (a single value for uniform fields, 0 on inactive cells).
    pub fn ell_values(&self, cone: &ConeSpec) -> Result<Vec<f64>> {
        match self {
            CurvatureField::Uniform(op) => Ok(vec![ell(op, cone)?.value]),
            CurvatureField::Gauss { k, mask } => {
                // Every cone reduces to K ≥ 0 in dimension two.
                Ok(k.iter()
                    .zip(mask)
                    .map(|(v, a)| if *a { (-v).max(0.0) } else { 0.0 })
                    .collect())
            }
        }
    }

    /// Scalar curvature per point.
    pub fn scalar_values(&self) -> Vec<f64> {
        match self {
            CurvatureField::Uniform(op) => vec![op.scalar_curvature()],
            CurvatureField::Gauss { k, .. } => k.iter().map(|v| 2.0 * v).collect(),
        }
    }
}

/// Curvature of a model state.
pub fn curvature_of_state(state: &FlowState) -> CurvatureField {
    match state {
        FlowState::SpaceForm(s) => CurvatureField::Uniform(s.operator()),
        FlowState::Homogeneous(s) => CurvatureField::Uniform(s.curvature_operator()),
        FlowState::Surface(s) => CurvatureField::Gauss {
            k: s.gauss_curvature(),
            mask: s.mask().to_vec(),
        },
    }
}

/// A time-indexed family of model metrics with cached curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub kind: FlowKind,
    pub dt: f64,
    pub params: serde_json::Value,
    times: Vec<f64>,
    states: Vec<FlowState>,
    curvature: Vec<CurvatureField>,
    /// Time at which the integrator stopped because a coefficient would leave the positive cone.
    pub singular_at: Option<f64>,
}

impl FlowRecord {
    pub fn new(kind: FlowKind, dt: f64, params: serde_json::Value) -> Self {
        Self {
            kind,
            dt,
            params,
            times: Vec::new(),
            states: Vec::new(),
            curvature: Vec::new(),
            singular_at: None,
        }
    }

    /// Appends a state with a time strictly after the last one.
    pub fn push(&mut self, state: FlowState) -> Result<()> {
        if state.kind() != self.kind {
            return Err(Error::InvalidInput(format!(
                "{:?} state in a {:?} record",
                state.kind(),
                self.kind
            )));
        }
        let t = state.time();
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::InvalidInput(format!(
                    "time {t} does not follow {last}"
                )));
            }
        }
        self.curvature.push(curvature_of_state(&state));
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    /// Closed-form space-form flow sampled at `times`.
    pub fn space_form(n: usize, k0: f64, times: &[f64]) -> Result<Self> {
        let mut rec = Self::new(
            FlowKind::SpaceForm,
            0.0,
            serde_json::json!({ "n": n, "k0": k0 }),
        );
        for &t in times {
            rec.push(FlowState::SpaceForm(exact_space_form_flow(n, k0, t)?))?;
        }
        Ok(rec)
    }

    /// RK4 flow recorded every `every` steps; stops before a singular step.
    pub fn homogeneous(initial: &MilnorState, dt: f64, steps: usize, every: usize) -> Result<Self> {
        let every = every.max(1);
        let params = serde_json::json!({ "g0": initial.g, "c": initial.c, "steps": steps });
        let mut rec = Self::new(FlowKind::Homogeneous3, dt, params);
        rec.push(FlowState::Homogeneous(*initial))?;
        let mut s = *initial;
        for k in 1..=steps {
            match step_homogeneous_flow(&s, dt) {
                Ok(next) => s = next,
                Err(Error::SingularTime { t, .. }) => {
                    rec.singular_at = Some(t);
                    break;
                }
                Err(e) => return Err(e),
            }
            if k % every == 0 {
                rec.push(FlowState::Homogeneous(s))?;
            }
        }
        Ok(rec)
    }

    /// Explicit surface flow recorded every `every` steps.
    pub fn surface(
        initial: &ConformalSurface,
        dt: f64,
        steps: usize,
        every: usize,
        scheme: SurfaceScheme,
    ) -> Result<Self> {
        let every = every.max(1);
        let params = serde_json::json!({ "m": initial.m(), "steps": steps, "scheme": scheme });
        let mut rec = Self::new(FlowKind::ConformalSurface, dt, params);
        rec.push(FlowState::Surface(initial.clone()))?;
        let mut s = initial.clone();
        for k in 1..=steps {
            s = step_conformal_surface_flow(&s, dt, scheme)?;
            if k % every == 0 {
                rec.push(FlowState::Surface(s.clone()))?;
            }
        }
        Ok(rec)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[FlowState] {
        &self.states
    }

    pub fn curvature(&self) -> &[CurvatureField] {
        &self.curvature
    }

    /// Surface states, if this is a grid flow.
    pub fn surfaces(&self) -> Vec<&ConformalSurface> {
        self.states
            .iter()
            .filter_map(|s| match s {
                FlowState::Surface(x) => Some(x),
                _ => None,
            })
            .collect()
    }

    /// `(t, metric)` pairs of a grid flow.
    pub fn snapshots(&self) -> Vec<(f64, DiscreteManifold)> {
        self.times
            .iter()
            .zip(&self.states)
            .filter_map(|(t, s)| match s {
                FlowState::Surface(x) => Some((*t, x.manifold())),
                _ => None,
            })
            .collect()
    }

    /// JSON header: kind, parameters, step and sample count.
    pub fn header(&self) -> serde_json::Value {
        serde_json::json!({ "kind": self.kind, "params": self.params, "dt": self.dt, "samples": self.len() })
    }

    /// One row per time (coefficients) or per (time, cell) for grids.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (t, s) in self.times.iter().zip(&self.states) {
            let ts = format_sig17(*t);
            match s {
                FlowState::SpaceForm(x) => {
                    out.push_str(&csv_record(&[
                        ts,
                        format_sig17(x.scale),
                        format_sig17(x.curvature),
                    ]));
                }
                FlowState::Homogeneous(x) => {
                    let mut row = vec![ts];
                    row.extend(x.g.iter().map(|v| format_sig17(*v)));
                    out.push_str(&csv_record(&row));
                }
                FlowState::Surface(x) => {
                    for (c, u) in x.u().iter().enumerate() {
                        out.push_str(&csv_record(&[ts.clone(), c.to_string(), format_sig17(*u)]));
                    }
                }
            }
        }
        out
    }
}
