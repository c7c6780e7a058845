//! Conjugate heat kernel `(∂_t − Δ − scal)G = 0` on evolving grids and across the junctions of a
//! flow-in-expansion.

mod kernel;
mod stage;
mod verify;

pub use kernel::{
    adjoint_kernel, adjoint_run, forward_kernel, forward_run, generalized_kernel,
    solve_conjugate_kernel, FlowPoint, HeatKernelSlice,
};
pub use stage::{ExpansionFlow, Frame, Stage};
pub use verify::{verify_kernel_properties, GradientProbe, KernelReport, KernelSample};
