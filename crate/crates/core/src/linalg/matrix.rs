use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::LinalgError;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    context: "from_rows",
                    expected: n_cols,
                    found: r.len(),
                    index: Some(i),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                context: "from_row_major",
                expected: rows * cols,
                found: data.len(),
                index: None,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
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

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "add dimension mismatch"
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scaled(-1.0))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        d
    }

    /// First non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize, f64)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k / self.cols, k % self.cols, self.data[k]))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Square matrix that is exactly symmetric.
///
/// The upper triangle of whatever it is built from is authoritative; the
/// lower triangle is a mirror, so `m[(i, j)] == m[(j, i)]` bitwise.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Mirrors the upper triangle of `m` onto the lower one.
    pub fn from_upper(m: &Matrix) -> Result<Self, LinalgError> {
        if !m.is_square() || m.rows() == 0 {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        Ok(Self(Matrix::from_fn(
            n,
            n,
            |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] },
        )))
    }

    /// `(m + mᵀ) / 2`.
    pub fn symmetrize(m: &Matrix) -> Result<Self, LinalgError> {
        if !m.is_square() || m.rows() == 0 {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        Self::from_upper(&Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// Builds from a function that is only queried for `i <= j`.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "SymMatrix needs dim >= 1");
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self(Matrix::diagonal(diag))
    }

    /// `Σ_k c_k v_k v_kᵀ`.
    pub fn sum_of_outer(dim: usize, terms: &[(f64, &[f64])]) -> Self {
        Self::from_upper_fn(dim, |i, j| terms.iter().map(|(c, v)| c * v[i] * v[j]).sum())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.0.mul_vec(x)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(self.0.sub(&other.0))
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix(self.0.scaled(s))
    }

    /// `self + c · v vᵀ`.
    pub fn add_outer(&self, c: f64, v: &[f64]) -> SymMatrix {
        let n = self.dim();
        SymMatrix::from_upper_fn(n, |i, j| self.0[(i, j)] + c * v[i] * v[j])
    }

    /// `Bᵀ S B` for a `dim × k` matrix `B`.
    pub fn congruence(&self, b: &Matrix) -> SymMatrix {
        let sb = self.0.matmul(b);
        let full = b.transpose().matmul(&sb);
        SymMatrix::symmetrize(&full).expect("congruence of a square matrix is square")
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

impl TryFrom<Matrix> for SymMatrix {
    type Error = LinalgError;
    fn try_from(m: Matrix) -> Result<Self, LinalgError> {
        SymMatrix::from_upper(&m)
    }
}

impl From<SymMatrix> for Matrix {
    fn from(s: SymMatrix) -> Matrix {
        s.0
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_upper_mirrors_exactly() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [99.0, 3.0]]).unwrap();
        let s = SymMatrix::from_upper(&m).unwrap();
        assert_eq!(s[(1, 0)], 2.0);
        assert_eq!(s.as_matrix().symmetry_defect(), 0.0);
    }

    #[test]
    fn rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(SymMatrix::from_upper(&m), Err(LinalgError::NotSquare { .. })));
        assert!(SymMatrix::from_upper(&Matrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(Matrix::from_rows(&rows).is_err());
    }

    #[test]
    fn matmul_against_hand_product() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c, Matrix::from_rows(&[[2.0, 1.0], [4.0, 3.0]]).unwrap());
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
    }
}
