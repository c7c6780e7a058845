//! The verification suites. Each turns one group of numerical claims into [`Check`] rows.
//!
//! [`Check`]: crate::report::Check

use std::f64::consts::PI;

use ricci_core::flows::ConformalSurface;
use ricci_core::Result;

use crate::config::{ExperimentConfig, Suite};
use crate::report::SuiteOutput;

pub mod cones;
pub mod cutoff;
pub mod distortion;
pub mod expansion;
pub mod flows;
pub mod kernel;

/// Run-wide settings handed to every suite.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: ExperimentConfig,
    pub strict: bool,
}

pub fn run_suite(suite: Suite, ctx: &Context) -> Result<SuiteOutput> {
    match suite {
        Suite::Cones => cones::run(ctx),
        Suite::Flows => flows::run(ctx),
        Suite::Kernel => kernel::run(ctx),
        Suite::Cutoff => cutoff::run(ctx),
        Suite::Distortion => distortion::run(ctx),
        Suite::Expansion => expansion::run(ctx),
        Suite::All => {
            let mut out = SuiteOutput::default();
            for s in Suite::EACH {
                let part = run_suite(s, ctx)?;
                out.checks.extend(part.checks);
                out.constants.extend(part.constants);
                out.series.extend(part.series);
                out.notices.extend(part.notices);
            }
            Ok(out)
        }
    }
}

/// `u₀ = a·sin(2πx)·sin(2πy)` on the `m×m` torus.
pub(crate) fn torus_bump(m: usize, amplitude: f64) -> Result<ConformalSurface> {
    ConformalSurface::from_fn(m, |x, y| {
        amplitude * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
    })
}

/// Explicit substeps per kernel step of size `dt`, at half the stability bound.
pub(crate) fn substeps(s: &ConformalSurface, dt: f64) -> usize {
    (dt / (0.5 * s.dt_bound())).ceil().max(1.0) as usize
}
