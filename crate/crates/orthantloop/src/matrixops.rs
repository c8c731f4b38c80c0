//! Small dense symmetric matrices: inverse, determinant, cofactors,
//! Schur complements and normalized correlation matrices.
//!
//! Sizes are capped at [`MAX_DIM`]; everything is plain Gaussian elimination
//! on row-major storage, generic over real and complex entries.

use crate::error::{Error, Result};
use crate::kinematics::SigmaMatrix;
use crate::scalar::{Scalar, C64};

pub const MAX_DIM: usize = 9;

/// Above this 1-norm condition estimate cofactors are taken from explicit minors.
const COFACTOR_CONDITION_LIMIT: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle and mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Builds from full rows; rejects non-square or asymmetric input.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("matrix is not square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                let scale = a.abs().max(b.abs()).max(1.0);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::InvalidConfig(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets entries (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SymMatrix<U> {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn to_c64(&self) -> SymMatrix<C64> {
        self.map(|x| x.to_c64())
    }

    pub fn row_sum(&self, i: usize) -> T {
        (0..self.n).map(|j| self.get(i, j)).sum()
    }

    pub fn total_sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Largest |entry|.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs().powi(2)).sum::<f64>().sqrt()
    }

    /// Minor with row and column `i` removed.
    pub fn delete_index(&self, i: usize) -> Result<Self> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.n,
            });
        }
        let keep: Vec<usize> = (0..self.n).filter(|&k| k != i).collect();
        Ok(self.submatrix(&keep))
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// `out[a][b] = self[perm[a]][perm[b]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        self.submatrix(perm)
    }

    /// `self + alpha * v v^T`.
    pub fn add_rank_one(&self, v: &[f64], alpha: T) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) + alpha * (v[i] * v[j]))
    }

    /// Rescales to unit diagonal, dividing entry (i, j) by sqrt(d_i) sqrt(d_j)
    /// with each square root taken separately (principal branch).
    pub fn normalized(&self) -> Self {
        let s: Vec<T> = self.diagonal().into_iter().map(|d| d.sqrt()).collect();
        let mut m = Self::from_fn(self.n, |i, j| self.get(i, j) / (s[i] * s[j]));
        for i in 0..self.n {
            m.data[i * self.n + i] = T::one();
        }
        m
    }

    /// Schur complement eliminating the indices `elim`; the result lives on the
    /// remaining indices in increasing order.
    pub fn schur_complement(&self, elim: &[usize]) -> Result<Self> {
        let keep: Vec<usize> = (0..self.n).filter(|k| !elim.contains(k)).collect();
        let c = self.submatrix(elim);
        let c_inv = c.inverse()?;
        Ok(Self::from_fn(keep.len(), |a, b| {
            let mut v = self.get(keep[a], keep[b]);
            for (p, &ep) in elim.iter().enumerate() {
                for (q, &eq) in elim.iter().enumerate() {
                    v -= self.get(keep[a], ep) * c_inv.get(p, q) * self.get(eq, keep[b]);
                }
            }
            v
        }))
    }

    pub fn determinant(&self) -> T {
        let mut a = self.data.clone();
        det_in_place(&mut a, self.n)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        if n > MAX_DIM {
            return Err(Error::MatrixTooLarge(n));
        }
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                .unwrap();
            let pv = a[piv * n + col];
            if pv.abs() == 0.0 || !pv.is_finite() {
                return Err(Error::SingularMatrix {
                    det: 0.0,
                    threshold: 0.0,
                });
            }
            if piv != col {
                for k in 0..n {
                    a.swap(piv * n + k, col * n + k);
                    inv.swap(piv * n + k, col * n + k);
                }
            }
            for k in 0..n {
                a[col * n + k] /= pv;
                inv[col * n + k] /= pv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == T::zero() {
                    continue;
                }
                for k in 0..n {
                    let (ack, ick) = (a[col * n + k], inv[col * n + k]);
                    a[r * n + k] -= f * ack;
                    inv[r * n + k] -= f * ick;
                }
            }
        }
        let raw = SymMatrix { n, data: inv };
        Ok(Self::from_fn(n, |i, j| {
            (raw.get(i, j) + raw.get(j, i)) * 0.5
        }))
    }

    /// 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Cofactor matrix Delta_ij. Uses det * inverse unless the condition
    /// estimate exceeds 1e8, then explicit minors.
    pub fn cofactors(&self) -> Result<Self> {
        let n = self.n;
        if n == 1 {
            return Ok(Self::identity(1));
        }
        let det = self.determinant();
        if let Ok(inv) = self.inverse() {
            let cond = self.norm1() * inv.norm1();
            if cond.is_finite() && cond <= COFACTOR_CONDITION_LIMIT {
                return Ok(inv.map(|x| x * det));
            }
        }
        Ok(self.cofactors_by_minors())
    }

    /// Cofactors from explicit (n-1)x(n-1) determinants.
    pub fn cofactors_by_minors(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| {
            let mut minor = Vec::with_capacity((n - 1) * (n - 1));
            for r in (0..n).filter(|&r| r != i) {
                for c in (0..n).filter(|&c| c != j) {
                    minor.push(self.get(r, c));
                }
            }
            let d = det_in_place(&mut minor, n - 1);
            if (i + j) % 2 == 0 {
                d
            } else {
                -d
            }
        })
    }
}

/// Determinant of a general row-major n x n matrix, destroying `a`.
pub fn det_in_place<T: Scalar>(a: &mut [T], n: usize) -> T {
    let mut det = T::one();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap();
        let pv = a[piv * n + col];
        if pv.abs() == 0.0 {
            return T::zero();
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        det *= pv;
        for r in col + 1..n {
            let f = a[r * n + col] / pv;
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= f * v;
            }
        }
    }
    det
}

impl SymMatrix<f64> {
    /// Lower Cholesky factor (row-major), or `None` when a pivot is not
    /// positive.
    pub fn cholesky(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(l)
    }

    /// Classifies the spectrum by diagonally pivoted symmetric elimination
    /// with pivot tolerance `rel_tol * max diagonal`.
    pub fn definiteness(&self, rel_tol: f64) -> Definiteness {
        let n = self.n;
        let scale = self.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max);
        let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
        let mut a = self.data.clone();
        let mut active: Vec<usize> = (0..n).collect();
        while !active.is_empty() {
            let (pos, &p) = active
                .iter()
                .enumerate()
                .max_by(|x, y| a[*x.1 * n + *x.1].total_cmp(&a[*y.1 * n + *y.1]))
                .unwrap();
            let d = a[p * n + p];
            if d <= tol {
                // Every remaining diagonal is below tolerance: semidefinite
                // only if the whole remaining block vanishes.
                let rest_max = active
                    .iter()
                    .flat_map(|&i| active.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| a[i * n + j].abs())
                    .fold(0.0, f64::max);
                return if rest_max <= tol {
                    Definiteness::PositiveSemidefinite
                } else {
                    Definiteness::Indefinite
                };
            }
            active.remove(pos);
            for &i in &active {
                let f = a[i * n + p] / d;
                for &j in &active {
                    a[i * n + j] -= f * a[p * n + j];
                }
            }
        }
        Definiteness::PositiveDefinite
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

/// R = Sigma^{-1}, normalized correlations, cofactors and determinants.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationData<T = f64> {
    pub r_matrix: SymMatrix<T>,
    pub rho: SymMatrix<T>,
    pub cofactors: SymMatrix<T>,
    pub det_sigma: T,
    pub d_reduced: T,
}

impl<T: Scalar> CorrelationData<T> {
    /// Builds from any symmetric nonsingular matrix. The singularity test is
    /// |det| < 1e-12 * prod |Sigma_ii|.
    pub fn from_matrix(sigma: &SymMatrix<T>) -> Result<Self> {
        let n = sigma.dim();
        if n > MAX_DIM {
            return Err(Error::MatrixTooLarge(n));
        }
        let diag_prod: T = sigma
            .diagonal()
            .into_iter()
            .fold(T::one(), |acc, d| acc * d);
        let det = sigma.determinant();
        let threshold = 1e-12 * diag_prod.abs();
        if det.abs() < threshold || det.abs() == 0.0 {
            return Err(Error::SingularMatrix {
                det: det.abs(),
                threshold,
            });
        }
        let r_matrix = sigma.inverse()?;
        let rho = r_matrix.normalized();
        let cofactors = sigma.cofactors()?;
        Ok(CorrelationData {
            r_matrix,
            rho,
            cofactors,
            det_sigma: det,
            d_reduced: det / diag_prod,
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

/// Correlation data of a kinematic Sigma matrix.
pub fn correlation_data(sigma: &SigmaMatrix) -> Result<CorrelationData<f64>> {
    CorrelationData::from_matrix(&sigma.entries)
}

/// Minor with row/column `i` removed.
pub fn delete_index<T: Scalar>(matrix: &SymMatrix<T>, i: usize) -> Result<SymMatrix<T>> {
    matrix.delete_index(i)
}
