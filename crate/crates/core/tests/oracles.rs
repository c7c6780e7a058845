use proptest::prelude::*;
use ricci_core::flows::MilnorState;

/// Structure constants `C[i][j][k]` of `[f_i, f_j] = Σ C_ij^k f_k` in the orthonormal frame
/// `f_i = e_i/√g_i` of a Milnor frame.
fn structure(g: [f64; 3], c: [f64; 3]) -> [[[f64; 3]; 3]; 3] {
    let mut s = [[[0.0; 3]; 3]; 3];
    for (k, (i, j)) in [(0, (1, 2)), (1, (2, 0)), (2, (0, 1))] {
        let v = c[k] * g[k].sqrt() / (g[i] * g[j]).sqrt();
        s[i][j][k] = v;
        s[j][i][k] = -v;
    }
    s
}

/// Koszul formula for left-invariant fields: `Γ_ij^k = ½(C_ij^k − C_jk^i + C_ki^j)`.
fn christoffel(s: &[[[f64; 3]; 3]; 3]) -> [[[f64; 3]; 3]; 3] {
    let mut gam = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                gam[i][j][k] = 0.5 * (s[i][j][k] - s[j][k][i] + s[k][i][j]);
            }
        }
    }
    gam
}

/// `⟨R(f_a, f_b)f_c, f_d⟩` with `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`.
fn riemann(g: [f64; 3], c: [f64; 3]) -> impl Fn(usize, usize, usize, usize) -> f64 {
    let s = structure(g, c);
    let gam = christoffel(&s);
    move |a, b, cc, d| {
        let mut v = 0.0;
        for e in 0..3 {
            v += gam[b][cc][e] * gam[a][e][d] - gam[a][cc][e] * gam[b][e][d];
            v -= s[a][b][e] * gam[e][cc][d];
        }
        v
    }
}

fn koszul_ricci(g: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let r = riemann(g, c);
    let mut ric = [0.0; 3];
    for (y, out) in ric.iter_mut().enumerate() {
        *out = (0..3).map(|i| r(i, y, y, i)).sum();
    }
    ric
}

fn coefficient() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), Just(-1.0), -2.0..2.0f64]
}

proptest! {
    #[test]
    fn milnor_ricci_matches_koszul(
        g in prop::array::uniform3(0.2..5.0f64),
        c in prop::array::uniform3(coefficient()),
    ) {
        let state = MilnorState::new(g, c).unwrap();
        let expect = koszul_ricci(g, c);
        let got = state.ricci();
        let scale = 1.0 + expect.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..3 {
            prop_assert!((got[i] - expect[i]).abs() <= 1e-12 * scale, "{got:?} vs {expect:?}");
        }
    }

    #[test]
    fn milnor_sectional_matches_koszul(
        g in prop::array::uniform3(0.2..5.0f64),
        c in prop::array::uniform3(coefficient()),
    ) {
        let r = riemann(g, c);
        let expect = [r(0, 1, 1, 0), r(0, 2, 2, 0), r(1, 2, 2, 1)];
        let got = MilnorState::new(g, c).unwrap().sectional();
        let scale = 1.0 + expect.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..3 {
            prop_assert!((got[i] - expect[i]).abs() <= 1e-12 * scale, "{got:?} vs {expect:?}");
        }
    }
}

#[test]
fn round_sphere_has_unit_sectional_curvature() {
    let r = riemann([1.0; 3], [2.0; 3]);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        assert!((r(a, b, b, a) - 1.0).abs() < 1e-14);
    }
}
