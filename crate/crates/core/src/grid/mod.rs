//! Periodic grids with conformal metrics: Laplacians, volumes, path-metric distances and
//! Gaussian integral checks.

mod gaussian;
mod geodesic;
mod manifold;

pub use gaussian::{
    gaussian_ball_integral, gaussian_tail_check, heat_comparison_constant, heat_comparison_sides,
    heat_comparison_sweep, BallIntegralSweep, ComparisonReport, TailReport,
};
pub use geodesic::{
    ball_of, distance_to_boundary, distances_from, distances_within, eikonal_distance_to_boundary,
    geodesic_distance, geodesic_distance_with, metric_ball, Stencil,
};
pub use manifold::{
    flat_laplacian, gradient_norm, integrate, integrate_active, laplacian_apply, laplacian_at,
    DiscreteManifold,
};
