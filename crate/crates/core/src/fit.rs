//! Small fitting helpers: smallest feasible constant on a log grid and least squares lines.

use crate::tolerances::{FIT_C_MAX, FIT_C_MIN, FIT_C_POINTS};

/// Value of the `k`-th point of the default log grid.
pub fn log_grid_point(k: usize) -> f64 {
    let a = FIT_C_MIN.ln();
    let b = FIT_C_MAX.ln();
    (a + (b - a) * k as f64 / (FIT_C_POINTS - 1) as f64).exp()
}

/// Smallest grid value `C` with `feasible(C)`, assuming feasibility is monotone in `C`.
pub fn smallest_feasible<F: Fn(f64) -> bool>(feasible: F) -> Option<f64> {
    if !feasible(log_grid_point(FIT_C_POINTS - 1)) {
        return None;
    }
    if feasible(log_grid_point(0)) {
        return Some(log_grid_point(0));
    }
    let (mut lo, mut hi) = (0usize, FIT_C_POINTS - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(log_grid_point(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(log_grid_point(hi))
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).1
}
