//! Space-time cutoff functions built from covering balls of a collar annulus.

mod build;
mod profile;
mod separated;
mod verify;

pub use build::{build_cutoff, CutoffField, CutoffParams};
pub use profile::{
    plateau, plateau_d1, plateau_d2, profile_bound, ramp, ramp_d1, ramp_d2, smoothstep,
};
pub use separated::maximal_separated_set;
pub use verify::{fit_cutoff_exponents, verify_cutoff, CutoffExponents, CutoffReport};
