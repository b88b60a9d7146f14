use super::{LinalgError, Matrix};
use crate::tolerance;

/// LU factorization with partial pivoting, `P A = L U` packed in one matrix.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: Matrix,
    perm: Vec<usize>,
    odd_permutation: bool,
}

impl LuFactorization {
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
        if !a.is_square() || a.rows() == 0 {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        super::check_finite("lu", a)?;
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd_permutation = false;
        let threshold = tolerance::LU_PIVOT * a.max_abs();
        for k in 0..n {
            let (piv_row, piv_val) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_val <= threshold || piv_val == 0.0 {
                return Err(LinalgError::Singular {
                    column: k,
                    pivot: piv_val,
                });
            }
            if piv_row != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv_row, j)];
                    lu[(piv_row, j)] = tmp;
                }
                perm.swap(k, piv_row);
                odd_permutation = !odd_permutation;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            odd_permutation,
        })
    }

    pub fn determinant(&self) -> f64 {
        let d: f64 = (0..self.lu.rows()).map(|i| self.lu[(i, i)]).product();
        if self.odd_permutation {
            -d
        } else {
            d
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "lu solve dimension mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Solves `A x = b`.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(LuFactorization::new(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_with_pivoting() {
        // zero leading pivot forces a row swap
        let a = Matrix::from_rows(&[[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = lu_solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(x_true) {
            assert_abs_diff_eq!(*xi, ti, epsilon = 1e-14);
        }
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(
            lu_solve(&a, &[1.0, 1.0]),
            Err(LinalgError::Singular { column: 1, .. })
        ));
    }
}
