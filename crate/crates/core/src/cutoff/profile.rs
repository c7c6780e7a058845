//! Plateau profiles used by the cutoff: `f` drops from 1 to 0 on `[1/4, 1/2]`, `F` is convex
//! with `F = 0` on `(−∞, 0]` and `F(1) = 1`.

/// Quintic smoothstep `6x⁵ − 15x⁴ + 10x³` clamped to `[0, 1]`.
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

fn smoothstep_d1(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    30.0 * x * x * (x - 1.0) * (x - 1.0)
}

fn smoothstep_d2(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    60.0 * x * (x - 1.0) * (2.0 * x - 1.0)
}

/// `f(z) = 1 − S(4z − 1)`.
pub fn plateau(z: f64) -> f64 {
    1.0 - smoothstep(4.0 * z - 1.0)
}

pub fn plateau_d1(z: f64) -> f64 {
    -4.0 * smoothstep_d1(4.0 * z - 1.0)
}

pub fn plateau_d2(z: f64) -> f64 {
    -16.0 * smoothstep_d2(4.0 * z - 1.0)
}

/// `F(z) = (z³ + z⁵)/2` for `z > 0`, 0 otherwise.
pub fn ramp(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        0.5 * (z * z * z + z.powi(5))
    }
}

pub fn ramp_d1(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        0.5 * (3.0 * z * z + 5.0 * z.powi(4))
    }
}

pub fn ramp_d2(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        3.0 * z + 10.0 * z * z * z
    }
}

/// `max(|f'|, |f''|, |F'|, |F''|)` over the relevant ranges.
pub fn profile_bound() -> f64 {
    // |f'| ≤ 4·15/8, |f''| ≤ 16·10/√3, F' ≤ 4 and F'' ≤ 13 on [0, 1].
    (16.0 * 10.0 / 3f64.sqrt()).max(13.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_values() {
        assert_eq!(plateau(0.0), 1.0);
        assert_eq!(plateau(0.25), 1.0);
        assert_eq!(plateau(0.5), 0.0);
        assert_eq!(plateau(0.9), 0.0);
        let mut last = 1.0;
        for k in 0..=100 {
            let v = plateau(k as f64 / 100.0);
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn ramp_values() {
        assert_eq!(ramp(-1.0), 0.0);
        assert_eq!(ramp(1.0), 1.0);
        assert_eq!(ramp_d1(1.0), 4.0);
        assert_eq!(ramp_d2(1.0), 13.0);
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        // The second derivative has corners at the plateau ends, z = 1/4 and z = 1/2.
        for k in (1..40).filter(|k| *k != 10 && *k != 20) {
            let z = k as f64 / 40.0;
            assert!(((plateau(z + h) - plateau(z - h)) / (2.0 * h) - plateau_d1(z)).abs() < 1e-5);
            assert!(
                ((plateau_d1(z + h) - plateau_d1(z - h)) / (2.0 * h) - plateau_d2(z)).abs() < 1e-4
            );
            assert!(((ramp(z + h) - ramp(z - h)) / (2.0 * h) - ramp_d1(z)).abs() < 1e-6);
        }
        assert!(profile_bound() >= 4.0 * 15.0 / 8.0);
    }
}
