//! Tolerances and default effort levels shared by the algorithms and their tests.

/// Symmetry and Bianchi-identity checks on curvature operators.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Default membership slack for the eigenvalue cones.
pub const EIGEN_CONE_TOL: f64 = 1e-9;

/// Default membership slack for the frame-search cones.
pub const FRAME_CONE_TOL: f64 = 1e-6;

/// Random restarts of the frame search.
pub const FRAME_RESTARTS: usize = 64;

/// Descent iterations per restart.
pub const FRAME_ITERATIONS: usize = 200;

/// Relative residual for the implicit heat step.
pub const CG_REL_TOL: f64 = 1e-14;

/// Iteration cap for the implicit heat step.
pub const CG_MAX_ITER: usize = 5000;

/// Clamp level for negative kernel undershoot in reports.
pub const KERNEL_UNDERSHOOT: f64 = 1e-10;

/// Stability factor of the explicit surface flow: dt ≤ factor·h²·min(e^u).
pub const SURFACE_CFL: f64 = 0.2;

/// Bounds of the log-spaced constant fits.
pub const FIT_C_MIN: f64 = 0.1;
pub const FIT_C_MAX: f64 = 1e4;
pub const FIT_C_POINTS: usize = 4001;
