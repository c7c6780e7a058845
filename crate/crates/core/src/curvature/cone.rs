use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frames::{search, FrameBudget, FrameFunctional, FrameSearch};
use super::operator::CurvatureOperator;
use crate::error::{Error, Result};
use crate::tolerances::{EIGEN_CONE_TOL, FRAME_CONE_TOL};

/// The four curvature conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeKind {
    NonnegOperator,
    TwoNonneg,
    WPIC2,
    WPIC1,
}

impl ConeKind {
    pub const ALL: [ConeKind; 4] = [
        ConeKind::NonnegOperator,
        ConeKind::TwoNonneg,
        ConeKind::WPIC2,
        ConeKind::WPIC1,
    ];

    pub fn uses_frames(self) -> bool {
        matches!(self, ConeKind::WPIC2 | ConeKind::WPIC1)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConeKind::NonnegOperator => "nonneg_operator",
            ConeKind::TwoNonneg => "two_nonneg",
            ConeKind::WPIC2 => "wpic2",
            ConeKind::WPIC1 => "wpic1",
        }
    }
}

/// A cone together with its membership slack and frame-search effort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub tol: f64,
    pub budget: FrameBudget,
}

impl ConeSpec {
    /// Cone with the default tolerance for its kind.
    pub fn new(kind: ConeKind) -> Self {
        let tol = if kind.uses_frames() {
            FRAME_CONE_TOL
        } else {
            EIGEN_CONE_TOL
        };
        Self {
            kind,
            tol,
            budget: FrameBudget::default(),
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_budget(mut self, budget: FrameBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "cone tolerance {} is negative",
                self.tol
            )));
        }
        if self.budget.restarts == 0 || self.budget.iterations == 0 {
            return Err(Error::InvalidInput(
                "frame budget must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Data identifying the binding constraint of a membership test.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Lowest eigenvalues (one or two) and their eigenvectors as columns.
    Eigen {
        values: Vec<f64>,
        vectors: DMatrix<f64>,
    },
    /// Minimizing frame of the product operator.
    Frame(FrameSearch),
}

/// Outcome of [`cone_contains`].
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub inside: bool,
    /// The tested quantity (λ_min, λ₁+λ₂ or the frame minimum); `inside` iff `margin ≥ −tol`.
    pub margin: f64,
    /// True when the test is vacuous for the dimension.
    pub vacuous: bool,
    pub witness: Option<Witness>,
}

/// How an ℓ value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EllMethod {
    ClosedForm,
    Bisection,
}

/// Result of [`ell`].
#[derive(Debug, Clone, PartialEq)]
pub struct EllResult {
    pub value: f64,
    pub certificate: Option<Witness>,
    pub method: EllMethod,
}

/// Effective cone after the two-dimensional collapse.
fn effective_kind(rm: &CurvatureOperator, kind: ConeKind) -> ConeKind {
    if rm.dim() == 2 {
        ConeKind::NonnegOperator
    } else {
        kind
    }
}

/// Quantity whose sign decides membership, with its witness. `stop_below` allows an early exit.
fn margin(
    rm: &CurvatureOperator,
    cone: &ConeSpec,
    stop_below: Option<f64>,
) -> Result<(f64, bool, Option<Witness>)> {
    match effective_kind(rm, cone.kind) {
        ConeKind::NonnegOperator => {
            let e = rm.eigen();
            let w = Witness::Eigen {
                values: vec![e.values[0]],
                vectors: e.vectors.columns(0, 1).into_owned(),
            };
            Ok((e.values[0], false, Some(w)))
        }
        ConeKind::TwoNonneg => {
            let e = rm.eigen();
            let w = Witness::Eigen {
                values: e.values[..2].to_vec(),
                vectors: e.vectors.columns(0, 2).into_owned(),
            };
            Ok((e.values[0] + e.values[1], false, Some(w)))
        }
        kind @ (ConeKind::WPIC2 | ConeKind::WPIC1) => {
            let k = if kind == ConeKind::WPIC2 { 2 } else { 1 };
            let product = rm.product_with_flat_factor(k)?;
            if product.dim() < 4 {
                return Ok((0.0, true, None));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cone.budget.seed);
            let found = search(
                &product,
                FrameFunctional::Isotropic,
                cone.budget,
                &mut rng,
                stop_below,
            )?;
            Ok((found.value, false, Some(Witness::Frame(found))))
        }
    }
}

/// Membership of `Rm` in the cone, with the violating eigen-data or frame when outside.
pub fn cone_contains(rm: &CurvatureOperator, cone: &ConeSpec) -> Result<Membership> {
    cone.validate()?;
    let (m, vacuous, witness) = margin(rm, cone, Some(-cone.tol))?;
    Ok(Membership {
        inside: vacuous || m >= -cone.tol,
        margin: m,
        vacuous,
        witness,
    })
}

/// ℓ: the smallest `ε ≥ 0` with `Rm + εI` in the cone.
pub fn ell(rm: &CurvatureOperator, cone: &ConeSpec) -> Result<EllResult> {
    cone.validate()?;
    match effective_kind(rm, cone.kind) {
        ConeKind::NonnegOperator => {
            let (m, _, w) = margin(rm, cone, None)?;
            Ok(EllResult {
                value: (-m).max(0.0),
                certificate: w,
                method: EllMethod::ClosedForm,
            })
        }
        ConeKind::TwoNonneg => {
            let (m, _, w) = margin(rm, cone, None)?;
            Ok(EllResult {
                value: (-m / 2.0).max(0.0),
                certificate: w,
                method: EllMethod::ClosedForm,
            })
        }
        _ => ell_bisection(rm, cone),
    }
}

/// ℓ by bisection on `ε ∈ [0, 1+|λ_min|·N]`, stopping when the bracket is narrower than `tol`.
///
/// The bracket test uses the exact sign of the margin for the eigenvalue cones, so that the result
/// matches the closed forms. Frame cones contain frames through the flat factor whose value is
/// zero for every shift, so their test allows a rounding floor of `64·ε·(1 + |Rm| + shift)`.
pub fn ell_bisection(rm: &CurvatureOperator, cone: &ConeSpec) -> Result<EllResult> {
    cone.validate()?;
    let frames = effective_kind(rm, cone.kind).uses_frames();
    let norm = rm.norm();
    let inside = |eps: f64| -> Result<(bool, Option<Witness>)> {
        let floor = if frames {
            64.0 * f64::EPSILON * (1.0 + norm + eps)
        } else {
            0.0
        };
        let (m, vacuous, w) = margin(&rm.shifted(eps), cone, Some(-floor))?;
        Ok((vacuous || m >= -floor, w))
    };
    let (at_zero, w0) = inside(0.0)?;
    if at_zero {
        return Ok(EllResult {
            value: 0.0,
            certificate: w0,
            method: EllMethod::Bisection,
        });
    }
    let lmin = rm.eigenvalues()[0];
    let mut hi = 1.0 + lmin.abs() * rm.bivector_dim() as f64;
    let (ok, mut cert_hi) = inside(hi)?;
    if !ok {
        return Err(Error::BracketFailure { upper: hi });
    }
    let mut lo = 0.0;
    let width = cone.tol.max(f64::EPSILON * hi);
    while hi - lo >= width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (ok, w) = inside(mid)?;
        if ok {
            hi = mid;
            cert_hi = w;
        } else {
            lo = mid;
        }
    }
    Ok(EllResult {
        value: hi,
        certificate: cert_hi,
        method: EllMethod::Bisection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_in_every_cone_and_ell_zero() {
        for n in 3..6 {
            let id = CurvatureOperator::identity(n).unwrap();
            for kind in ConeKind::ALL {
                let spec = ConeSpec::new(kind).with_budget(FrameBudget {
                    restarts: 8,
                    ..Default::default()
                });
                assert!(cone_contains(&id, &spec).unwrap().inside, "{kind:?} n={n}");
                assert_eq!(ell(&id, &spec).unwrap().value, 0.0);
            }
        }
    }

    #[test]
    fn minus_identity_outside_eigen_cones() {
        for n in 3..6 {
            let m = CurvatureOperator::identity(n).unwrap().scaled(-1.0);
            for kind in [ConeKind::NonnegOperator, ConeKind::TwoNonneg] {
                let mem = cone_contains(&m, &ConeSpec::new(kind)).unwrap();
                assert!(!mem.inside);
                assert!(matches!(mem.witness, Some(Witness::Eigen { .. })));
            }
            assert_eq!(
                ell(&m, &ConeSpec::new(ConeKind::NonnegOperator))
                    .unwrap()
                    .value,
                1.0
            );
        }
    }

    #[test]
    fn two_nonneg_example_spectrum() {
        let rm = CurvatureOperator::diagonal(3, &[-3.0, 1.0, 5.0]).unwrap();
        let spec = ConeSpec::new(ConeKind::TwoNonneg);
        let closed = ell(&rm, &spec).unwrap();
        assert_eq!(closed.method, EllMethod::ClosedForm);
        assert!((closed.value - 1.0).abs() < 1e-15);
        let bis = ell_bisection(&rm, &spec).unwrap();
        assert!((bis.value - closed.value).abs() < 1e-8);
    }

    #[test]
    fn two_dimensional_collapse() {
        let rm = CurvatureOperator::diagonal(2, &[-0.25]).unwrap();
        for kind in ConeKind::ALL {
            let spec = ConeSpec::new(kind);
            assert!(!cone_contains(&rm, &spec).unwrap().inside);
            let e = ell(&rm, &spec).unwrap();
            assert_eq!(e.value, 0.25);
            assert_eq!(e.method, EllMethod::ClosedForm);
        }
    }

    #[test]
    fn wpic_bisection_on_negative_identity() {
        // For −I the product operator is −I ⊕ 0 and the frame minimum is −4 at frames inside ℝⁿ.
        let rm = CurvatureOperator::identity(4).unwrap().scaled(-1.0);
        let spec = ConeSpec::new(ConeKind::WPIC1).with_budget(FrameBudget {
            restarts: 8,
            ..Default::default()
        });
        let e = ell(&rm, &spec).unwrap();
        assert_eq!(e.method, EllMethod::Bisection);
        assert!((e.value - 1.0).abs() < 1e-5, "{}", e.value);
        let _ = ChaCha8Rng::seed_from_u64(0);
    }

    #[test]
    fn negative_tolerance_rejected() {
        let id = CurvatureOperator::identity(3).unwrap();
        assert!(cone_contains(&id, &ConeSpec::new(ConeKind::TwoNonneg).with_tol(-1.0)).is_err());
    }
}
