//! Algebraic curvature operators, the four curvature cones and the ℓ functional.

mod cone;
mod frames;
mod operator;

pub use cone::{
    cone_contains, ell, ell_bisection, ConeKind, ConeSpec, EllMethod, EllResult, Membership,
    Witness,
};
pub use frames::{
    complex_sectional_value, isotropic_value, min_complex_sectional, min_isotropic_curvature,
    min_isotropic_curvature_with, random_frame_matrix, search as frame_search, FrameBudget,
    FrameFunctional, FrameSearch,
};
pub use operator::{bivector_count, pair_index, pair_of_index, CurvatureOperator, SortedEigen};

use crate::error::Result;
use nalgebra::DMatrix;

/// The identity operator of dimension `n`.
pub fn make_identity_operator(n: usize) -> Result<CurvatureOperator> {
    CurvatureOperator::identity(n)
}

/// `Σ_{i≠j} R_{ijij}`.
pub fn scalar_curvature(rm: &CurvatureOperator) -> f64 {
    rm.scalar_curvature()
}

/// `Ric_{jl} = Σ_i R_{ijil}`.
pub fn ricci_tensor(rm: &CurvatureOperator) -> DMatrix<f64> {
    rm.ricci_tensor()
}

/// Curvature operator of `M × ℝᵏ`.
pub fn product_with_flat_factor(rm: &CurvatureOperator, k: usize) -> Result<CurvatureOperator> {
    rm.product_with_flat_factor(k)
}
