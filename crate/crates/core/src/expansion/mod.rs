//! The staged extension scheme at desk scale: conformal completion, the geometric time schedule,
//! the staged run with its audits, the localized `ℓ` estimate and the weak evolution inequality.

mod completion;
mod estimate;
mod pipeline;
mod schedule;
mod weak;

pub use completion::{
    collar_curvature_constant, conformal_completion, conformal_completion_with, gauss_curvature_of,
    Completion, CompletionProfile, CUSP_CONSTANT,
};
pub use estimate::{ell_integral_estimate, EllEstimateTrace, EstimateOptions};
pub use pipeline::{
    bump_centre, bump_surface, calibrate, frame_curvature, run_expansion, run_pipeline,
    schedule_for, Calibration, ExpansionRun, PipelineConfig, StageAudit,
};
pub use schedule::{
    j_sum_bound, j_sum_closed, j_sum_direct, plan_schedule, ExpansionSchedule, ScheduleConstants,
};
pub use weak::{weak_inequality_check, WeakReport};
