use serde::{Deserialize, Serialize};

use super::stage::{ExpansionFlow, Stage};
use crate::error::{Error, Result};
use crate::tolerances::{CG_MAX_ITER, CG_REL_TOL};

/// Discrete `G(·, t; y, s)` with its mass `∫G d_t x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelSlice {
    pub source: (usize, f64),
    pub eval_time: f64,
    pub stage: usize,
    pub values: Vec<f64>,
    pub mass: f64,
}

/// Implicit operator `A = diag(W⁻ − dt·S) − dt·L` of one step of
/// `W G_{k+1} − W⁻ G_k = dt·(L + S + (W − W⁻)/dt)·G_{k+1}`, the product-rule form of
/// `(∂_t − Δ − scal)G = 0`. Here `W`, `W⁻` are the cell volumes at the end and start of the step,
/// `S = ½(scal·W + scal⁻·W⁻)` is the trapezoidal volume-weighted curvature and `L` is the
/// combinatorial Laplacian of the mask.
struct StepOperator<'a> {
    stage: &'a Stage,
    diag: Vec<f64>,
    precond: Vec<f64>,
    dt: f64,
}

impl<'a> StepOperator<'a> {
    /// Operator for the step ending at frame `k ≥ 1`.
    fn new(stage: &'a Stage, k: usize) -> Result<Self> {
        let dt = stage.dt();
        let w = stage.weights(k);
        let w_prev = stage.weights(k - 1);
        let (scal, scal_prev) = (&stage.frame(k).scal, &stage.frame(k - 1).scal);
        let mask = stage.mask();
        let s: Vec<f64> = (0..w.len())
            .map(|c| 0.5 * (scal[c] * w[c] + scal_prev[c] * w_prev[c]))
            .collect();
        let max_pos = (0..w.len())
            .filter(|&c| mask[c])
            .map(|c| s[c].max(0.0) / w_prev[c])
            .fold(0.0, f64::max);
        if dt * max_pos >= 1.0 {
            return Err(Error::Configuration(format!(
                "kernel step {dt:e} breaks positivity: dt·max S/W⁻ = {:.3} ≥ 1",
                dt * max_pos
            )));
        }
        let m = stage.m() as i64;
        let mut diag = vec![0.0; w.len()];
        let mut precond = vec![0.0; w.len()];
        for c in 0..w.len() {
            if !mask[c] {
                continue;
            }
            diag[c] = w_prev[c] - dt * s[c];
            let deg = neighbours(c, m).iter().filter(|&&nb| mask[nb]).count() as f64;
            precond[c] = 1.0 / (diag[c] + dt * deg);
        }
        Ok(Self {
            stage,
            diag,
            precond,
            dt,
        })
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mask = self.stage.mask();
        let m = self.stage.m() as i64;
        for c in 0..x.len() {
            if !mask[c] {
                out[c] = 0.0;
                continue;
            }
            let lap: f64 = neighbours(c, m)
                .iter()
                .filter(|&&nb| mask[nb])
                .map(|&nb| x[nb] - x[c])
                .sum();
            out[c] = self.diag[c] * x[c] - self.dt * lap;
        }
    }

    /// Jacobi-preconditioned CG from the initial guess `x`. After convergence the constant
    /// correction `c·1` with `c = Σr/Σdiag` is added, which makes `Σ(Ax) = Σb` up to rounding.
    fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        let n = b.len();
        let mask = self.stage.mask();
        let mut r = vec![0.0; n];
        let mut ap = vec![0.0; n];
        self.apply(x, &mut ap);
        for c in 0..n {
            r[c] = if mask[c] { b[c] - ap[c] } else { 0.0 };
        }
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        let mut z: Vec<f64> = r.iter().zip(&self.precond).map(|(a, p)| a * p).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut it = 0;
        while rnorm > CG_REL_TOL * bnorm {
            if it >= CG_MAX_ITER {
                if rnorm > 1e-10 * bnorm {
                    return Err(Error::SolverFailure {
                        residual: rnorm / bnorm,
                        iterations: it,
                    });
                }
                break;
            }
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for c in 0..n {
                x[c] += alpha * p[c];
                r[c] -= alpha * ap[c];
            }
            for c in 0..n {
                z[c] = r[c] * self.precond[c];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for c in 0..n {
                p[c] = z[c] + beta * p[c];
            }
            let new_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            it += 1;
            let stalled = new_norm >= rnorm && rnorm <= 1e-13 * bnorm;
            rnorm = new_norm;
            if stalled {
                break;
            }
        }
        self.apply(x, &mut ap);
        let (mut rs, mut ds) = (0.0, 0.0);
        for c in 0..n {
            if mask[c] {
                rs += b[c] - ap[c];
                ds += self.diag[c];
            }
        }
        if ds != 0.0 {
            let shift = rs / ds;
            for c in 0..n {
                if mask[c] {
                    x[c] += shift;
                }
            }
        }
        Ok(())
    }
}

fn neighbours(c: usize, m: i64) -> [usize; 4] {
    let (i, j) = ((c as i64) % m, (c as i64) / m);
    let idx = |a: i64, b: i64| (b.rem_euclid(m) * m + a.rem_euclid(m)) as usize;
    [idx(i + 1, j), idx(i - 1, j), idx(i, j + 1), idx(i, j - 1)]
}

/// Advances `f` (a kernel field at frame `k0`) to frame `k1` within one stage, calling
/// `visit(k, field)` after every step.
pub(crate) fn forward_in_stage<V: FnMut(usize, &[f64])>(
    stage: &Stage,
    f: &mut Vec<f64>,
    k0: usize,
    k1: usize,
    visit: &mut V,
) -> Result<()> {
    for k in k0..k1 {
        let op = StepOperator::new(stage, k + 1)?;
        let w = stage.weights(k);
        let b: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
        let mut x = f.clone();
        op.solve(&b, &mut x)?;
        *f = x;
        visit(k + 1, f);
    }
    Ok(())
}

/// Carries the adjoint field `q = G(x, t; ·, t_{k1})` back to frame `k0`, calling `visit(k, q)`
/// after every step.
pub(crate) fn adjoint_in_stage<V: FnMut(usize, &[f64])>(
    stage: &Stage,
    q: &mut Vec<f64>,
    k0: usize,
    k1: usize,
    visit: &mut V,
) -> Result<()> {
    for k in (k0..k1).rev() {
        let op = StepOperator::new(stage, k + 1)?;
        let w1 = stage.weights(k + 1);
        let b: Vec<f64> = q.iter().zip(&w1).map(|(a, b)| a * b).collect();
        let mut x = q.clone();
        op.solve(&b, &mut x)?;
        *q = x;
        visit(k, q);
    }
    Ok(())
}

/// A point in a flow-in-expansion: stage, frame within the stage, and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub stage: usize,
    pub frame: usize,
    pub time: f64,
}

/// Forward kernel from the normalized delta at `(y, s)`, calling `visit(point, field)` at every
/// step time (including the junction transfers, which are reported on the new stage).
pub fn forward_run<V: FnMut(FlowPoint, &[f64])>(
    exp: &ExpansionFlow,
    y: usize,
    s: f64,
    t: f64,
    mut visit: V,
) -> Result<HeatKernelSlice> {
    if !(t > s) {
        return Err(Error::OutOfDomain {
            t,
            reason: format!("evaluation time must follow the source time {s}"),
        });
    }
    let j = exp.source_stage(s)?;
    let i = exp.eval_stage(t)?;
    let stages = exp.stages();
    let src = &stages[j];
    if !src.mask().get(y).copied().unwrap_or(false) {
        return Err(Error::MaskedDomain(y));
    }
    let ks = src.frame_index(s)?;
    let w = src.weights(ks);
    let mut f = vec![0.0; w.len()];
    f[y] = 1.0 / w[y];
    visit(
        FlowPoint {
            stage: j,
            frame: ks,
            time: s,
        },
        &f,
    );
    for st in j..=i {
        let stage = &stages[st];
        let start = if st == j { ks } else { 0 };
        let end = if st == i {
            stage.frame_index(t)?
        } else {
            stage.steps()
        };
        forward_in_stage(stage, &mut f, start, end, &mut |k, field| {
            visit(
                FlowPoint {
                    stage: st,
                    frame: k,
                    time: stage.frame_time(k),
                },
                field,
            )
        })?;
        if st < i {
            let next = &stages[st + 1];
            let before = stage.weights(stage.steps());
            let after = next.weights(0);
            for c in 0..f.len() {
                f[c] = if next.mask()[c] {
                    f[c] * before[c] / after[c]
                } else {
                    0.0
                };
            }
            visit(
                FlowPoint {
                    stage: st + 1,
                    frame: 0,
                    time: next.t_start,
                },
                &f,
            );
        }
    }
    let eval = &stages[i];
    let wt = eval.weights(eval.frame_index(t)?);
    let mass = f.iter().zip(&wt).map(|(a, b)| a * b).sum();
    Ok(HeatKernelSlice {
        source: (y, s),
        eval_time: t,
        stage: i,
        values: f,
        mass,
    })
}

/// `G(·, t; y, s)`.
pub fn forward_kernel(exp: &ExpansionFlow, y: usize, s: f64, t: f64) -> Result<HeatKernelSlice> {
    forward_run(exp, y, s, t, |_, _| {})
}

/// Within-stage conjugate heat kernel `G(·, t; y, s)`.
pub fn solve_conjugate_kernel(stage: &Stage, y: usize, s: f64, t: f64) -> Result<HeatKernelSlice> {
    forward_kernel(&ExpansionFlow::single(stage.clone()), y, s, t)
}

/// Adjoint run: `G(x, t; ·, τ)` for every step time `τ` from `t` down to `s_min`, passed to
/// `visit(point, field)`. At a junction the post-junction field is visited first.
pub fn adjoint_run<V: FnMut(FlowPoint, &[f64])>(
    exp: &ExpansionFlow,
    x: usize,
    t: f64,
    s_min: f64,
    mut visit: V,
) -> Result<Vec<f64>> {
    if !(t > s_min) {
        return Err(Error::OutOfDomain {
            t,
            reason: format!("evaluation time must follow {s_min}"),
        });
    }
    let i = exp.eval_stage(t)?;
    let j = exp.source_stage(s_min)?;
    let stages = exp.stages();
    let eval = &stages[i];
    if !eval.mask().get(x).copied().unwrap_or(false) {
        return Err(Error::MaskedDomain(x));
    }
    let kt = eval.frame_index(t)?;
    let w = eval.weights(kt);
    let mut q = vec![0.0; w.len()];
    q[x] = 1.0 / w[x];
    visit(
        FlowPoint {
            stage: i,
            frame: kt,
            time: t,
        },
        &q,
    );
    let mut st = i;
    loop {
        let stage = &stages[st];
        let end = if st == i { kt } else { stage.steps() };
        let start = if st == j {
            stage.frame_index(s_min)?
        } else {
            0
        };
        adjoint_in_stage(stage, &mut q, start, end, &mut |k, field| {
            visit(
                FlowPoint {
                    stage: st,
                    frame: k,
                    time: stage.frame_time(k),
                },
                field,
            )
        })?;
        if st == j {
            break;
        }
        let mask = stage.mask();
        for c in 0..q.len() {
            if !mask[c] {
                q[c] = 0.0;
            }
        }
        st -= 1;
        let prev = &stages[st];
        visit(
            FlowPoint {
                stage: st,
                frame: prev.steps(),
                time: prev.t_end,
            },
            &q,
        );
    }
    Ok(q)
}

/// `G(x, t; ·, s)` as a field over `y`.
pub fn adjoint_kernel(exp: &ExpansionFlow, x: usize, t: f64, s: f64) -> Result<Vec<f64>> {
    adjoint_run(exp, x, t, s, |_, _| {})
}

/// `G(x, t; y, s)` across the junctions of `exp`.
pub fn generalized_kernel(exp: &ExpansionFlow, x: usize, t: f64, y: usize, s: f64) -> Result<f64> {
    let slice = forward_kernel(exp, y, s, t)?;
    if !exp.stages()[slice.stage]
        .mask()
        .get(x)
        .copied()
        .unwrap_or(false)
    {
        return Err(Error::MaskedDomain(x));
    }
    Ok(slice.values[x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiscreteManifold;

    fn flat_stage(m: usize, steps: usize, t_end: f64) -> Stage {
        Stage::static_stage(&DiscreteManifold::flat(m).unwrap(), None, 0.0, t_end, steps).unwrap()
    }

    #[test]
    fn flat_mass_is_conserved() {
        let stage = flat_stage(32, 20, 0.01);
        let exp = ExpansionFlow::single(stage);
        let mut worst = 0.0_f64;
        forward_run(&exp, 100, 0.0, 0.01, |p, f| {
            let w = exp.stages()[0].weights(p.frame);
            let mass: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
            worst = worst.max((mass - 1.0).abs());
            assert!(f.iter().all(|v| *v >= -1e-12));
        })
        .unwrap();
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn adjoint_matches_forward() {
        let u: Vec<f64> = (0..256)
            .map(|c| 0.2 * ((c % 16) as f64 * 0.4).sin())
            .collect();
        let man = DiscreteManifold::conformal(16, &u).unwrap();
        let scal: Vec<f64> = (0..256)
            .map(|c| 0.5 * ((c / 16) as f64 * 0.3).cos())
            .collect();
        let stage = Stage::static_stage(&man, Some(scal), 0.0, 0.02, 10).unwrap();
        let exp = ExpansionFlow::single(stage);
        let q = adjoint_kernel(&exp, 40, 0.02, 0.004).unwrap();
        for y in [3, 40, 200] {
            let g = generalized_kernel(&exp, 40, 0.02, y, 0.004).unwrap();
            assert!(
                (q[y] - g).abs() <= 1e-10 * g.abs().max(1e-3),
                "{} vs {g}",
                q[y]
            );
        }
    }

    #[test]
    fn positivity_condition_enforced() {
        let man = DiscreteManifold::flat(8).unwrap();
        let stage = Stage::static_stage(&man, Some(vec![200.0; 64]), 0.0, 0.1, 10).unwrap();
        let err = solve_conjugate_kernel(&stage, 0, 0.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }

    #[test]
    fn evaluation_before_source_rejected() {
        let exp = ExpansionFlow::single(flat_stage(8, 4, 1.0));
        assert!(matches!(
            forward_kernel(&exp, 0, 0.5, 0.5),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
