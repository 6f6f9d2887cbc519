//! Small dense real-matrix kernel.
//!
//! Everything in the correlation-set formulas reduces to products such as
//! `Aᵀ Z B` or `A⁺ C (Bᵀ)⁺`, which are at most `m × m` with `m` a handful of
//! measurement settings, plus `3 × 3` Bloch-space matrices. The kernel is
//! row-major, heap-backed, and makes no attempt at blocking.

mod eigen;
mod rotation;
mod svd;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{sqrt_psd, symmetric_eigen, SymmetricEigen};
pub use rotation::{orthogonality_defect, random_rotation, Component};
pub use svd::{
    det_sign, max_trace_over_rotations, norm_minus, norm_plus, op_norm, pinv, special_svd, svd,
    trace_norm, SpecialSvd, Svd, DEFAULT_RANK_TOL, DET_SIGN_REL_TOL,
};

/// Dense real matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(n, m, data)
    }

    pub fn from_diag(d: &[f64]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let n = cols.len();
        let m = cols.first().map(Vec::len).unwrap_or(0);
        if cols.iter().any(|c| c.len() != m) {
            return Err(Error::Dimension("ragged columns".into()));
        }
        Self::new(m, n, (0..m * n).map(|k| cols[k % n][k / n]).collect())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// `selfᵀ · v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "vector length mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| t * x).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Hilbert–Schmidt inner product `Tr[selfᵀ other]`.
    pub fn hs_dot(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        dot(&self.data, &other.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Largest absolute entrywise difference; `inf` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "determinant of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n == 3 {
            return Ok(det3(self));
        }
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap();
            if a[p * n + k] == 0.0 {
                return Ok(0.0);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Ok(det)
    }
}

fn det3(x: &RealMatrix) -> f64 {
    x[(0, 0)] * (x[(1, 1)] * x[(2, 2)] - x[(1, 2)] * x[(2, 1)])
        - x[(0, 1)] * (x[(1, 0)] * x[(2, 2)] - x[(1, 2)] * x[(2, 0)])
        + x[(0, 2)] * (x[(1, 0)] * x[(2, 1)] - x[(1, 1)] * x[(2, 0)])
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        self.try_matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Mul<f64> for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, t: f64) -> RealMatrix {
        self.scale(t)
    }
}

impl Add for &RealMatrix {
    type Output = RealMatrix;
    fn add(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in addition");
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &RealMatrix {
    type Output = RealMatrix;
    fn sub(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in subtraction");
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &RealMatrix {
    type Output = RealMatrix;
    fn neg(self) -> RealMatrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealMatrix{:?}", self.to_rows())
    }
}

impl TryFrom<Vec<Vec<f64>>> for RealMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<RealMatrix> for Vec<Vec<f64>> {
    fn from(m: RealMatrix) -> Self {
        m.to_rows()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Kronecker product `x ⊗ y`.
pub fn kron(x: &RealMatrix, y: &RealMatrix) -> RealMatrix {
    let (p, q) = y.shape();
    RealMatrix::from_fn(x.rows * p, x.cols * q, |i, j| {
        x[(i / p, j / q)] * y[(i % p, j % q)]
    })
}

/// Column-stacking vectorization.
pub fn vec(m: &RealMatrix) -> Vec<f64> {
    (0..m.cols).flat_map(|j| m.column(j)).collect()
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<RealMatrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    let m = RealMatrix::from_fn(rows, cols, |i, j| v[j * rows + i]);
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

/// `det(Aᵀ Z B)` evaluated through the Levi-Civita expansion
/// `(1/6) Σ T^A_{ijk} z_il z_jm z_kn T^B_{lmn}` with `T^X_{ijk} = det[x_i, x_j, x_k]`
/// built from the rows of `A` and `B`. Never forms `Aᵀ Z B`.
pub fn det3_intrinsic(a: &RealMatrix, b: &RealMatrix, z: &RealMatrix) -> Result<f64> {
    let m = z.rows();
    if a.cols() != 3 || b.cols() != 3 || !z.is_square() || a.rows() != m || b.rows() != m {
        return Err(Error::Dimension(format!(
            "det3_intrinsic needs A, B of shape {m}x3 and square Z, got {:?}, {:?}, {:?}",
            a.shape(),
            b.shape(),
            z.shape()
        )));
    }
    let ta = triple_tensor(a);
    let tb = triple_tensor(b);
    let idx = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
    // Contract one index of T^A with Z at a time: O(m^4) instead of O(m^6).
    let mut y1 = vec![0.0; m * m * m]; // [j,k,l]
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let t = ta[idx(i, j, k)];
                if t == 0.0 {
                    continue;
                }
                for l in 0..m {
                    y1[idx(j, k, l)] += t * z[(i, l)];
                }
            }
        }
    }
    let mut y2 = vec![0.0; m * m * m]; // [k,l,n2]
    for j in 0..m {
        for k in 0..m {
            for l in 0..m {
                let t = y1[idx(j, k, l)];
                for n2 in 0..m {
                    y2[idx(k, l, n2)] += t * z[(j, n2)];
                }
            }
        }
    }
    let mut total = 0.0;
    for k in 0..m {
        for l in 0..m {
            for n2 in 0..m {
                let t = y2[idx(k, l, n2)];
                for n3 in 0..m {
                    total += t * z[(k, n3)] * tb[idx(l, n2, n3)];
                }
            }
        }
    }
    Ok(total / 6.0)
}

fn triple_tensor(x: &RealMatrix) -> Vec<f64> {
    let m = x.rows();
    let row = |i: usize| [x[(i, 0)], x[(i, 1)], x[(i, 2)]];
    let mut t = vec![0.0; m * m * m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let c = cross(&row(i), &row(j));
            for k in 0..m {
                if k != i && k != j {
                    t[(i * m + j) * m + k] = dot(&c, &row(k));
                }
            }
        }
    }
    t
}
