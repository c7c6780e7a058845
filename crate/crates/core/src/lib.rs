//! Numerical toolkit for Ricci flow under lower curvature bounds: curvature cones, model flows,
//! discrete heat kernels on evolving grids, cutoffs, distance distortion and the expansion scheme.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod cutoff;
pub mod distortion;
pub mod error;
pub mod expansion;
pub mod fit;
pub mod flows;
pub mod grid;
pub mod heat;
pub mod io;
pub mod tolerances;

pub use error::{Error, Result};
