use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants feeding the schedule. `c2`, `c3` and `ν` are derived from these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstants {
    /// Curvature decay `|Rm| ≤ C₁/t`.
    pub c1: f64,
    /// Collar curvature constant of the conformal completion.
    pub gamma_conf: f64,
    /// APA 3 factor: `ℓ ≤ C₄α₀`.
    pub c4: f64,
    pub tau: f64,
    pub alpha0: f64,
    pub v0: f64,
    /// Ricci lower bound.
    pub k: f64,
    /// Distance-distortion constant.
    pub beta: f64,
}

impl ScheduleConstants {
    pub fn c2(&self) -> f64 {
        self.gamma_conf * self.c1
    }

    pub fn c3(&self) -> f64 {
        4.0 * self.c2()
    }

    pub fn nu(&self) -> f64 {
        1.0 + 1.0 / (4.0 * self.c3())
    }

    /// Checks `τ ≤ 1`, `β²C₃τ ≤ √τ/16 ≤ 1` and `τ ≤ C₁/4`, naming the first violated inequality.
    pub fn check_tau(&self) -> Result<()> {
        let tau = self.tau;
        if !(tau > 0.0) {
            return Err(Error::InfeasibleConstants(format!(
                "τ = {tau} must be positive"
            )));
        }
        if !(self.c1 > 0.0 && self.gamma_conf > 0.0) {
            return Err(Error::InfeasibleConstants(
                "C₁ and γ must be positive".into(),
            ));
        }
        if tau > 1.0 {
            return Err(Error::InfeasibleConstants(format!(
                "τ ≤ 1 fails: τ = {tau}"
            )));
        }
        let lhs = self.beta * self.beta * self.c3() * tau;
        if lhs > tau.sqrt() / 16.0 {
            return Err(Error::InfeasibleConstants(format!(
                "β²C₃τ ≤ √τ/16 fails: {lhs:e} > {:e}",
                tau.sqrt() / 16.0
            )));
        }
        if tau.sqrt() / 16.0 > 1.0 {
            return Err(Error::InfeasibleConstants("√τ/16 ≤ 1 fails".into()));
        }
        if tau > self.c1 / 4.0 {
            return Err(Error::InfeasibleConstants(format!(
                "τ ≤ C₁/4 fails: τ = {tau}, C₁ = {}",
                self.c1
            )));
        }
        Ok(())
    }
}

/// Junction times `t_{j+1} = νt_j` with the matching radii and completion scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSchedule {
    pub constants: ScheduleConstants,
    pub nu: f64,
    pub c2: f64,
    pub c3: f64,
    pub t_seq: Vec<f64>,
    /// `r_{j+1} = r_j − 4√(t_{j+1}/τ) − 6·t_{j+2}^{1/4}`, starting from `r₀`.
    pub r_seq: Vec<f64>,
    /// `ρ_j = √(t_j/C₁)`, the completion scale used at `t_j`.
    pub rho_seq: Vec<f64>,
    /// Smallest unit-ball volume ratio seen by the volume audits, once recorded.
    pub eta0: Option<f64>,
}

impl ExpansionSchedule {
    pub fn len(&self) -> usize {
        self.t_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_seq.is_empty()
    }

    /// `r₀ − r_final`.
    pub fn radius_drop(&self) -> f64 {
        self.r_seq[0] - self.r_seq[self.r_seq.len() - 1]
    }

    fn drop_after(t_next: f64, t_next2: f64, tau: f64) -> f64 {
        4.0 * (t_next / tau).sqrt() + 6.0 * t_next2.powf(0.25)
    }
}

/// Plans the schedule from `t₁` until `t_j` would exceed `τ/2` or `r_j` would drop below `r₀ − 1`.
pub fn plan_schedule(constants: ScheduleConstants, t1: f64, r0: f64) -> Result<ExpansionSchedule> {
    constants.check_tau()?;
    if !(t1 > 0.0 && t1 <= constants.tau / 2.0) {
        return Err(Error::InvalidInput(format!(
            "t₁ = {t1} must lie in (0, τ/2]"
        )));
    }
    let nu = constants.nu();
    let half = constants.tau / 2.0;
    let mut t_seq = vec![t1];
    let mut r_seq = vec![r0];
    loop {
        let t = t_seq[t_seq.len() - 1];
        let next = t * nu;
        if next > half {
            break;
        }
        let r =
            r_seq[r_seq.len() - 1] - ExpansionSchedule::drop_after(next, next * nu, constants.tau);
        if r < r0 - 1.0 {
            break;
        }
        t_seq.push(next);
        r_seq.push(r);
    }
    let rho_seq = t_seq.iter().map(|t| (t / constants.c1).sqrt()).collect();
    Ok(ExpansionSchedule {
        constants,
        nu,
        c2: constants.c2(),
        c3: constants.c3(),
        t_seq,
        r_seq,
        rho_seq,
        eta0: None,
    })
}

/// `Σ_{j<N} √(t_{j+1} − t_j)` by direct summation.
pub fn j_sum_direct(t_seq: &[f64]) -> f64 {
    t_seq.windows(2).map(|w| (w[1] - w[0]).sqrt()).sum()
}

/// Closed form of [`j_sum_direct`] for `t_j = t₁ν^{j−1}`, written through `t_final = t_N`.
pub fn j_sum_closed(nu: f64, t_final: f64, len: usize) -> f64 {
    if len < 2 {
        return 0.0;
    }
    let q = nu.sqrt();
    ((nu - 1.0) * t_final).sqrt() * (1.0 - q.powi(1 - len as i32)) / (q - 1.0)
}

/// Infinite-series bound `√((ν−1)t_final)/(√ν − 1)` on [`j_sum_closed`].
pub fn j_sum_bound(nu: f64, t_final: f64) -> f64 {
    ((nu - 1.0) * t_final).sqrt() / (nu.sqrt() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(c1: f64, gamma: f64, tau: f64) -> ScheduleConstants {
        ScheduleConstants {
            c1,
            gamma_conf: gamma,
            c4: 2.0,
            tau,
            alpha0: 0.05,
            v0: 1.0,
            k: 1.0,
            beta: 0.0,
        }
    }

    #[test]
    fn nu_from_constants() {
        let c = consts(1.0, 2.0, 0.25);
        assert_eq!(c.c3(), 8.0);
        assert_eq!(c.nu(), 1.03125);
    }

    #[test]
    fn schedule_invariants() {
        let s = plan_schedule(consts(1.0, 2.0, 0.25), 1e-7, 0.0).unwrap();
        assert!(s.len() > 5);
        for w in s.t_seq.windows(2) {
            assert!((w[1] / w[0] - s.nu).abs() <= 1e-15 * s.nu);
        }
        for (j, t) in s.t_seq.iter().enumerate() {
            assert!((t - 1e-7 * s.nu.powi(j as i32)).abs() <= 1e-10 * t);
        }
        assert!(s.radius_drop() <= 1.0);
        let direct = j_sum_direct(&s.t_seq);
        let closed = j_sum_closed(s.nu, s.t_seq[s.len() - 1], s.len());
        assert!((direct - closed).abs() <= 1e-10 * direct.max(1e-300));
        assert!(closed <= j_sum_bound(s.nu, s.t_seq[s.len() - 1]));
    }

    #[test]
    fn immediate_exit() {
        let s = plan_schedule(consts(1.0, 2.0, 0.25), 0.125, 0.0).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn infeasible_tau_is_named() {
        let err = plan_schedule(consts(0.1, 2.0, 0.25), 1e-3, 0.0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleConstants(ref s) if s.contains("C₁/4")));
        let mut c = consts(1.0, 2.0, 0.25);
        c.beta = 10.0;
        assert!(
            matches!(plan_schedule(c, 1e-3, 0.0), Err(Error::InfeasibleConstants(ref s)) if s.contains("β²C₃τ"))
        );
    }
}
