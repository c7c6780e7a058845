use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::format_sig17;
use crate::tolerances::ALGEBRA_TOL;

/// Number of basis bivectors `e_i∧e_j`, `i<j`, in dimension `n`.
pub fn bivector_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of `e_i∧e_j` (`i<j`) in the ordered bivector basis.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_of_index(n: usize, p: usize) -> (usize, usize) {
    let mut rest = p;
    for i in 0..n {
        let row = n - i - 1;
        if rest < row {
            return (i, i + 1 + rest);
        }
        rest -= row;
    }
    panic!("bivector index {p} out of range for n = {n}");
}

/// Algebraic curvature operator on Λ²ℝⁿ.
///
/// The matrix is indexed by the unit bivectors `e_i∧e_j` with `i<j`; entry
/// `((ij),(kl))` is `R_{ijkl}`. With this convention the round unit sphere has
/// the identity matrix and scalar curvature `n(n−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOperator {
    dim: usize,
    matrix: DMatrix<f64>,
}

/// Eigen-data sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

impl CurvatureOperator {
    /// Validated constructor: symmetric and Bianchi to [`ALGEBRA_TOL`] (relative to the entry scale).
    pub fn new(dim: usize, matrix: DMatrix<f64>) -> Result<Self> {
        check_dim(dim)?;
        let nb = bivector_count(dim);
        if matrix.nrows() != nb || matrix.ncols() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: matrix.nrows(),
            });
        }
        let op = Self { dim, matrix };
        let scale = op.matrix.amax().max(1.0);
        let sym = op.symmetry_defect();
        if sym > ALGEBRA_TOL * scale {
            return Err(Error::InvalidOperator(format!("asymmetry {sym:e}")));
        }
        let bianchi = op.bianchi_defect();
        if bianchi > ALGEBRA_TOL * scale {
            return Err(Error::InvalidOperator(format!(
                "Bianchi defect {bianchi:e}"
            )));
        }
        Ok(op)
    }

    /// The identity operator `I` (curvature of the unit sphere).
    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let nb = bivector_count(dim);
        Ok(Self {
            dim,
            matrix: DMatrix::identity(nb, nb),
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let nb = bivector_count(dim);
        Ok(Self {
            dim,
            matrix: DMatrix::zeros(nb, nb),
        })
    }

    /// Diagonal operator with the given entries on `e_i∧e_j` (always a valid curvature operator).
    pub fn diagonal(dim: usize, diag: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        let nb = bivector_count(dim);
        if diag.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: diag.len(),
            });
        }
        Ok(Self {
            dim,
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)),
        })
    }

    /// Random operator: symmetrized Gaussian matrix projected onto the Bianchi subspace.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        let nb = bivector_count(dim);
        let a = DMatrix::<f64>::from_fn(nb, nb, |_, _| rng.sample(StandardNormal));
        let mut m = (&a + a.transpose()) * 0.5;
        project_bianchi(dim, &mut m);
        Ok(Self { dim, matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bivector_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `R_{ijkl}` with all antisymmetries applied.
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let (p, s1) = signed_pair(self.dim, i, j);
        let (q, s2) = signed_pair(self.dim, k, l);
        s1 * s2 * self.matrix[(p, q)]
    }

    /// `Σ_{i≠j} R_{ijij}`.
    pub fn scalar_curvature(&self) -> f64 {
        2.0 * self.matrix.trace()
    }

    /// `Ric_{jl} = Σ_i R_{ijil}`.
    pub fn ricci_tensor(&self) -> DMatrix<f64> {
        let n = self.dim;
        let mut ric = DMatrix::zeros(n, n);
        for j in 0..n {
            for l in j..n {
                let s: f64 = (0..n).map(|i| self.entry(i, j, i, l)).sum();
                ric[(j, l)] = s;
                ric[(l, j)] = s;
            }
        }
        ric
    }

    /// Smallest eigenvalue of the Ricci tensor.
    pub fn min_ricci_eigenvalue(&self) -> f64 {
        let ric = self.ricci_tensor();
        SymmetricEigen::new(ric)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Eigen-decomposition of the Λ² matrix, ascending.
    pub fn eigen(&self) -> SortedEigen {
        let se = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(se.eigenvectors.nrows(), order.len(), |r, c| {
            se.eigenvectors[(r, order[c])]
        });
        SortedEigen { values, vectors }
    }

    /// Eigenvalues of the Λ² matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Operator norm `max |λ|` of the Λ² matrix.
    pub fn norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// `Rm + ε·I`.
    pub fn shifted(&self, eps: f64) -> Self {
        let mut m = self.matrix.clone();
        for k in 0..m.nrows() {
            m[(k, k)] += eps;
        }
        Self {
            dim: self.dim,
            matrix: m,
        }
    }

    /// `c·Rm`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * c,
        }
    }

    /// `Rm₁ + Rm₂`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// Curvature operator of `M × ℝᵏ`, `k ∈ {1, 2}`.
    pub fn product_with_flat_factor(&self, k: usize) -> Result<Self> {
        if k != 1 && k != 2 {
            return Err(Error::UnsupportedFactor(k));
        }
        let n = self.dim;
        let big = n + k;
        let nb = bivector_count(big);
        let mut m = DMatrix::zeros(nb, nb);
        for p in 0..self.bivector_dim() {
            let (i, j) = pair_of_index(n, p);
            let pp = pair_index(big, i, j);
            for q in 0..self.bivector_dim() {
                let (a, b) = pair_of_index(n, q);
                m[(pp, pair_index(big, a, b))] = self.matrix[(p, q)];
            }
        }
        Ok(Self {
            dim: big,
            matrix: m,
        })
    }

    /// Largest `|M − Mᵀ|` entry.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// Largest `|R_{ijkl}+R_{iklj}+R_{iljk}|` over all index quadruples.
    pub fn bianchi_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = self.entry(i, j, k, l)
                            + self.entry(i, k, l, j)
                            + self.entry(i, l, j, k);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Flat record: `n`, then the upper-triangular entries row-major.
    pub fn to_record(&self) -> Vec<f64> {
        let nb = self.bivector_dim();
        let mut out = Vec::with_capacity(1 + nb * (nb + 1) / 2);
        out.push(self.dim as f64);
        for p in 0..nb {
            for q in p..nb {
                out.push(self.matrix[(p, q)]);
            }
        }
        out
    }

    pub fn from_record(rec: &[f64]) -> Result<Self> {
        let n = rec
            .first()
            .copied()
            .ok_or_else(|| Error::InvalidInput("empty record".into()))?;
        if n.fract() != 0.0 || n < 2.0 {
            return Err(Error::InvalidInput(format!("bad dimension field {n}")));
        }
        let n = n as usize;
        let nb = bivector_count(n);
        let expected = 1 + nb * (nb + 1) / 2;
        if rec.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: rec.len(),
            });
        }
        let mut m = DMatrix::zeros(nb, nb);
        let mut it = rec[1..].iter();
        for p in 0..nb {
            for q in p..nb {
                let v = *it.next().unwrap();
                m[(p, q)] = v;
                m[(q, p)] = v;
            }
        }
        Self::new(n, m)
    }

    /// Record as one CSV line with 17 significant digits.
    pub fn to_csv_line(&self) -> String {
        let rec = self.to_record();
        let mut parts = vec![self.dim.to_string()];
        parts.extend(rec[1..].iter().map(|v| format_sig17(*v)));
        parts.join(",")
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorRecord {
    n: usize,
    entries: Vec<f64>,
}

impl Serialize for CurvatureOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorRecord {
            n: self.dim,
            entries: self.to_record()[1..].to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CurvatureOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = OperatorRecord::deserialize(d)?;
        let mut flat = vec![rec.n as f64];
        flat.extend(rec.entries);
        CurvatureOperator::from_record(&flat).map_err(serde::de::Error::custom)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension {
            dim,
            reason: "curvature operators need n ≥ 2",
        })
    } else {
        Ok(())
    }
}

fn signed_pair(n: usize, i: usize, j: usize) -> (usize, f64) {
    if i < j {
        (pair_index(n, i, j), 1.0)
    } else {
        (pair_index(n, j, i), -1.0)
    }
}

/// Removes the totally antisymmetric (Λ⁴) part of a symmetric matrix on Λ².
pub(crate) fn project_bianchi(n: usize, m: &mut DMatrix<f64>) {
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let ab_cd = (pair_index(n, a, b), pair_index(n, c, d));
                    let ac_bd = (pair_index(n, a, c), pair_index(n, b, d));
                    let ad_bc = (pair_index(n, a, d), pair_index(n, b, c));
                    let s = (m[ab_cd] - m[ac_bd] + m[ad_bc]) / 3.0;
                    for (idx, sign) in [(ab_cd, -1.0), (ac_bd, 1.0), (ad_bc, -1.0)] {
                        m[idx] += sign * s;
                        m[(idx.1, idx.0)] = m[idx];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_index_roundtrip() {
        for n in 2..8 {
            for p in 0..bivector_count(n) {
                let (i, j) = pair_of_index(n, p);
                assert_eq!(pair_index(n, i, j), p);
            }
        }
    }

    #[test]
    fn identity_has_sphere_scalar_curvature() {
        for n in 2..7 {
            let id = CurvatureOperator::identity(n).unwrap();
            assert_eq!(id.scalar_curvature(), (n * (n - 1)) as f64);
        }
        assert_eq!(
            CurvatureOperator::identity(2).unwrap().matrix().as_slice(),
            &[1.0]
        );
        assert!(CurvatureOperator::identity(1).is_err());
    }

    #[test]
    fn random_operator_satisfies_bianchi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..7 {
            let rm = CurvatureOperator::random(n, &mut rng).unwrap();
            assert!(rm.bianchi_defect() < 1e-12);
            assert!(rm.symmetry_defect() == 0.0);
        }
    }

    #[test]
    fn new_rejects_bianchi_violation() {
        let mut m = DMatrix::zeros(6, 6);
        m[(pair_index(4, 0, 1), pair_index(4, 2, 3))] = 1.0;
        m[(pair_index(4, 2, 3), pair_index(4, 0, 1))] = 1.0;
        assert!(matches!(
            CurvatureOperator::new(4, m),
            Err(Error::InvalidOperator(_))
        ));
    }

    #[test]
    fn record_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rm = CurvatureOperator::random(4, &mut rng).unwrap();
        let back = CurvatureOperator::from_record(&rm.to_record()).unwrap();
        assert_eq!(rm, back);
        let json = serde_json::to_string(&rm).unwrap();
        let back: CurvatureOperator = serde_json::from_str(&json).unwrap();
        assert_eq!(rm, back);
        assert_eq!(rm.to_csv_line().split(',').count(), 1 + 21);
    }

    #[test]
    fn flat_factor_only_one_or_two() {
        let id = CurvatureOperator::identity(3).unwrap();
        assert!(matches!(
            id.product_with_flat_factor(3),
            Err(Error::UnsupportedFactor(3))
        ));
        let p = id.product_with_flat_factor(1).unwrap();
        assert_eq!(p.dim(), 4);
        assert_eq!(p.scalar_curvature(), 6.0);
    }
}
