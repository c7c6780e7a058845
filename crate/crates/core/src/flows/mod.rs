//! Model Ricci flows: closed-form space forms, homogeneous 3D metrics and the conformal surface
//! flow on a torus grid, with audits of the standard a-priori bounds.

mod apriori;
mod homogeneous;
mod record;
mod space_form;
mod surface;

pub use apriori::{
    verify_apriori_bounds, verify_apriori_bounds_with, AprioriOptions, AprioriReport,
};
pub use homogeneous::{integrate_homogeneous, step_homogeneous_flow, MilnorState};
pub use record::{curvature_of_state, CurvatureField, FlowKind, FlowRecord, FlowState};
pub use space_form::{exact_space_form_flow, SpaceFormState};
pub use surface::{
    integrate_surface, sample_surface_flow, step_conformal_surface_flow, ConformalSurface,
    SurfaceScheme,
};
