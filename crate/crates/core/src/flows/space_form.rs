use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureOperator;
use crate::error::{Error, Result};

/// Closed-form Ricci flow of a constant-curvature metric at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormState {
    pub n: usize,
    pub k0: f64,
    pub t: f64,
    /// Factor multiplying the initial metric.
    pub scale: f64,
    /// Sectional curvature `K0/scale`.
    pub curvature: f64,
}

impl SpaceFormState {
    pub fn operator(&self) -> CurvatureOperator {
        // n ≥ 2 was checked on construction.
        CurvatureOperator::identity(self.n)
            .expect("valid dimension")
            .scaled(self.curvature)
    }
}

/// `g(t) = (1 − 2(n−1)K0·t)·g(0)` with sectional curvature `K0/(1 − 2(n−1)K0·t)`.
pub fn exact_space_form_flow(n: usize, k0: f64, t: f64) -> Result<SpaceFormState> {
    if n < 2 {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: "space forms need n ≥ 2",
        });
    }
    let scale = 1.0 - 2.0 * (n as f64 - 1.0) * k0 * t;
    if !(scale > 0.0) {
        return Err(Error::SingularTime { t, scale });
    }
    Ok(SpaceFormState {
        n,
        k0,
        t,
        scale,
        curvature: k0 / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_blows_up_at_half() {
        let s = exact_space_form_flow(2, 1.0, 0.25).unwrap();
        assert_eq!(s.scale, 0.5);
        assert_eq!(s.curvature, 2.0);
        assert!(matches!(
            exact_space_form_flow(2, 1.0, 0.5),
            Err(Error::SingularTime { .. })
        ));
    }

    #[test]
    fn hyperbolic_expands() {
        let a = exact_space_form_flow(3, -1.0, 0.5).unwrap();
        assert_eq!(a.scale, 3.0);
        assert!(a.curvature.abs() < 1.0);
        assert!((a.operator().scalar_curvature() + 2.0).abs() < 1e-15);
    }
}
