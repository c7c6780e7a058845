//! Multi-start descent over orthonormal 4-frames for the isotropic-curvature functional.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::operator::{bivector_count, pair_index, CurvatureOperator};
use crate::error::{Error, Result};
use crate::tolerances::{FRAME_ITERATIONS, FRAME_RESTARTS};

/// Effort of a frame search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameBudget {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for FrameBudget {
    fn default() -> Self {
        Self {
            restarts: FRAME_RESTARTS,
            iterations: FRAME_ITERATIONS,
            seed: 0x5eed_f4a3,
        }
    }
}

/// Best frame found by a search.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSearch {
    pub value: f64,
    /// `n×4` matrix whose columns are `e₁…e₄`.
    pub frame: DMatrix<f64>,
    /// `(λ, μ)` weights; `(1, 1)` for the isotropic functional.
    pub weights: (f64, f64),
}

/// Which functional the descent minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFunctional {
    /// `R₁₃₁₃+R₁₄₁₄+R₂₃₂₃+R₂₄₂₄−2R₁₂₃₄`.
    Isotropic,
    /// `R₁₃₁₃+λ²R₁₄₁₄+μ²R₂₃₂₃+λ²μ²R₂₄₂₄−2λμR₁₂₃₄` with `λ, μ ∈ [0,1]`.
    ComplexSectional,
    /// As above with `μ = 1`.
    ComplexSectionalPic1,
}

/// Minimum of the isotropic functional over orthonormal 4-frames.
pub fn min_isotropic_curvature(rm: &CurvatureOperator, budget: FrameBudget) -> Result<FrameSearch> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    min_isotropic_curvature_with(rm, budget, &mut rng)
}

/// As [`min_isotropic_curvature`] with an explicit generator.
pub fn min_isotropic_curvature_with<R: Rng + ?Sized>(
    rm: &CurvatureOperator,
    budget: FrameBudget,
    rng: &mut R,
) -> Result<FrameSearch> {
    search(rm, FrameFunctional::Isotropic, budget, rng, None)
}

/// Minimum of the complex-sectional functional (the weakly PIC2 test without the product construction).
pub fn min_complex_sectional(rm: &CurvatureOperator, budget: FrameBudget) -> Result<FrameSearch> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    search(
        rm,
        FrameFunctional::ComplexSectional,
        budget,
        &mut rng,
        None,
    )
}

/// Multi-start search; stops early once a value below `stop_below` is found.
pub fn search<R: Rng + ?Sized>(
    rm: &CurvatureOperator,
    functional: FrameFunctional,
    budget: FrameBudget,
    rng: &mut R,
    stop_below: Option<f64>,
) -> Result<FrameSearch> {
    let n = rm.dim();
    if n < 4 {
        return Err(Error::DimensionTooSmall(n));
    }
    if budget.restarts == 0 {
        return Err(Error::InvalidInput(
            "frame budget needs at least one restart".into(),
        ));
    }
    let mut eval = Evaluator::new(rm);
    let mut best: Option<FrameSearch> = None;
    for _ in 0..budget.restarts {
        let mut frame = random_frame(n, rng);
        let (mut lam, mut mu) = match functional {
            FrameFunctional::Isotropic => (1.0, 1.0),
            FrameFunctional::ComplexSectional => (rng.random::<f64>(), rng.random::<f64>()),
            FrameFunctional::ComplexSectionalPic1 => (rng.random::<f64>(), 1.0),
        };
        let value = descend(
            &mut eval,
            functional,
            &mut frame,
            &mut lam,
            &mut mu,
            budget.iterations,
        );
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(FrameSearch {
                value,
                frame: to_matrix(&frame, n),
                weights: (lam, mu),
            });
        }
        if let (Some(limit), Some(b)) = (stop_below, &best) {
            if b.value < limit {
                break;
            }
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Isotropic functional at an explicit frame (columns of `frame`, assumed orthonormal).
pub fn isotropic_value(rm: &CurvatureOperator, frame: &DMatrix<f64>) -> f64 {
    let n = rm.dim();
    let e: [Vec<f64>; 4] = std::array::from_fn(|c| frame.column(c).iter().cloned().collect());
    let mut eval = Evaluator::new(rm);
    eval.evaluate(&e, 1.0, 1.0, false);
    debug_assert_eq!(n, frame.nrows());
    eval.value
}

/// Complex-sectional functional at an explicit frame and weights.
pub fn complex_sectional_value(
    rm: &CurvatureOperator,
    frame: &DMatrix<f64>,
    lam: f64,
    mu: f64,
) -> f64 {
    let e: [Vec<f64>; 4] = std::array::from_fn(|c| frame.column(c).iter().cloned().collect());
    let mut eval = Evaluator::new(rm);
    eval.evaluate(&e, lam, mu, false);
    eval.value
}

/// Uniformly random orthonormal 4-frame in ℝⁿ as an `n×4` matrix.
pub fn random_frame_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    to_matrix(&random_frame(n, rng), n)
}

type Frame = [Vec<f64>; 4];

fn to_matrix(frame: &Frame, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, 4, |r, c| frame[c][r])
}

fn random_frame<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Frame {
    loop {
        let mut f: Frame =
            std::array::from_fn(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect());
        if orthonormalize(&mut f) {
            return f;
        }
    }
}

/// Modified Gram–Schmidt; false when the vectors are numerically dependent.
fn orthonormalize(f: &mut Frame) -> bool {
    for a in 0..4 {
        for b in 0..a {
            let d = dot(&f[a], &f[b]);
            let (head, tail) = f.split_at_mut(a);
            for (x, y) in tail[0].iter_mut().zip(&head[b]) {
                *x -= d * y;
            }
        }
        let norm = dot(&f[a], &f[a]).sqrt();
        if norm < 1e-10 {
            return false;
        }
        f[a].iter_mut().for_each(|x| *x /= norm);
    }
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn descend(
    eval: &mut Evaluator,
    functional: FrameFunctional,
    frame: &mut Frame,
    lam: &mut f64,
    mu: &mut f64,
    iterations: usize,
) -> f64 {
    let n = eval.n;
    let free_lam = functional != FrameFunctional::Isotropic;
    let free_mu = functional == FrameFunctional::ComplexSectional;
    eval.evaluate(frame, *lam, *mu, true);
    let mut value = eval.value;
    let mut eta = 0.5 / (1.0 + eval.scale);
    for _ in 0..iterations {
        // Riemannian gradient on the Stiefel manifold: G − E·sym(EᵀG).
        let g = eval.grad.clone();
        let mut rg = g.clone();
        for a in 0..4 {
            for b in 0..4 {
                let s = 0.5 * (dot(&frame[a], &g[b]) + dot(&frame[b], &g[a]));
                for i in 0..n {
                    rg[b][i] -= frame[a][i] * s;
                }
            }
        }
        let glam = if free_lam { eval.dlam } else { 0.0 };
        let gmu = if free_mu { eval.dmu } else { 0.0 };
        let gnorm = (rg.iter().map(|v| dot(v, v)).sum::<f64>() + glam * glam + gmu * gmu).sqrt();
        if gnorm < 1e-13 {
            break;
        }
        let mut accepted = false;
        while eta > 1e-15 {
            let mut trial: Frame = std::array::from_fn(|a| {
                frame[a]
                    .iter()
                    .zip(&rg[a])
                    .map(|(x, d)| x - eta * d)
                    .collect()
            });
            let tl = (*lam - eta * glam).clamp(0.0, 1.0);
            let tm = (*mu - eta * gmu).clamp(0.0, 1.0);
            if orthonormalize(&mut trial) {
                eval.evaluate(&trial, tl, tm, true);
                if eval.value < value {
                    *frame = trial;
                    *lam = tl;
                    *mu = tm;
                    value = eval.value;
                    accepted = true;
                    eta = (eta * 2.0).min(10.0 / (1.0 + eval.scale));
                    break;
                }
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // Leave the evaluator consistent with the final frame for callers that reuse it.
    eval.evaluate(frame, *lam, *mu, false);
    value
}

/// Evaluates the frame functional and its Euclidean gradient with reusable buffers.
struct Evaluator {
    n: usize,
    nb: usize,
    m: Vec<f64>,
    scale: f64,
    value: f64,
    grad: Frame,
    dlam: f64,
    dmu: f64,
    w: [Vec<f64>; 6],
    v: [Vec<f64>; 6],
    e: Frame,
}

// Bivector slots: 13, 14, 23, 24, 12, 34.
const PAIRS: [(usize, usize); 6] = [(0, 2), (0, 3), (1, 2), (1, 3), (0, 1), (2, 3)];

impl Evaluator {
    fn new(rm: &CurvatureOperator) -> Self {
        let n = rm.dim();
        let nb = bivector_count(n);
        let m: Vec<f64> = rm.matrix().as_slice().to_vec();
        let scale = rm.matrix().amax();
        Self {
            n,
            nb,
            m,
            scale,
            value: 0.0,
            grad: std::array::from_fn(|_| vec![0.0; n]),
            dlam: 0.0,
            dmu: 0.0,
            w: std::array::from_fn(|_| vec![0.0; nb]),
            v: std::array::from_fn(|_| vec![0.0; nb]),
            e: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    fn evaluate(&mut self, e: &Frame, lam: f64, mu: f64, with_grad: bool) {
        let (n, nb) = (self.n, self.nb);
        for (dst, src) in self.e.iter_mut().zip(e) {
            dst.copy_from_slice(src);
        }
        for (slot, &(a, b)) in PAIRS.iter().enumerate() {
            let w = &mut self.w[slot];
            for i in 0..n {
                for j in i + 1..n {
                    w[pair_index(n, i, j)] = e[a][i] * e[b][j] - e[a][j] * e[b][i];
                }
            }
        }
        for slot in 0..6 {
            let (w, v) = (&self.w[slot], &mut self.v[slot]);
            for (q, vq) in v.iter_mut().enumerate() {
                let col = &self.m[q * nb..(q + 1) * nb];
                *vq = col.iter().zip(w).map(|(x, y)| x * y).sum();
            }
        }
        let t: [f64; 4] = std::array::from_fn(|s| dot(&self.w[s], &self.v[s]));
        let x = dot(&self.w[4], &self.v[5]);
        let (l2, m2) = (lam * lam, mu * mu);
        let c = [1.0, l2, m2, l2 * m2];
        let cx = -2.0 * lam * mu;
        self.value = c[0] * t[0] + c[1] * t[1] + c[2] * t[2] + c[3] * t[3] + cx * x;
        self.dlam = 2.0 * lam * t[1] + 2.0 * lam * m2 * t[3] - 2.0 * mu * x;
        self.dmu = 2.0 * mu * t[2] + 2.0 * l2 * mu * t[3] - 2.0 * lam * x;
        if !with_grad {
            return;
        }
        for g in self.grad.iter_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        // Quadratic terms T_ab = (a∧b)ᵀM(a∧b): ∇_a = 2V b, ∇_b = −2V a with V = antisym(M(a∧b)).
        for (slot, &(a, b)) in PAIRS[..4].iter().enumerate() {
            let k = 2.0 * c[slot];
            self.apply_bivector(slot, b, a, k);
            self.apply_bivector(slot, a, b, -k);
        }
        // Cross term X = (e₁∧e₂)ᵀM(e₃∧e₄).
        self.apply_bivector(5, 1, 0, cx);
        self.apply_bivector(5, 0, 1, -cx);
        self.apply_bivector(4, 3, 2, cx);
        self.apply_bivector(4, 2, 3, -cx);
    }

    /// `grad[target] += k · V(v[slot]) · e[src]`.
    fn apply_bivector(&mut self, slot: usize, src: usize, target: usize, k: f64) {
        let n = self.n;
        let (v, x, g) = (&self.v[slot], &self.e[src], &mut self.grad[target]);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..i {
                s -= v[pair_index(n, j, i)] * x[j];
            }
            for j in i + 1..n {
                s += v[pair_index(n, i, j)] * x[j];
            }
            g[i] += k * s;
        }
    }
}
