use super::{check_finite, LinalgError, Matrix, SymMatrix};
use crate::tolerance;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("dim >= 1")
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// `‖V Vᵀ − I‖_max`
    pub fn orthogonality_defect(&self) -> f64 {
        let v = &self.eigenvectors;
        let vvt = v.matmul(&v.transpose());
        vvt.sub(&Matrix::identity(v.rows())).max_abs()
    }

    /// `V diag(λ) Vᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let vl = Matrix::from_fn(n, n, |i, j| v[(i, j)] * self.eigenvalues[j]);
        vl.matmul(&v.transpose())
    }

    /// Whether both decomposition certificates hold for `a`.
    pub fn certify(&self, a: &SymMatrix) -> bool {
        let scale = a.max_abs().max(1.0);
        self.orthogonality_defect() <= tolerance::EIGEN_ORTHOGONALITY
            && self.reconstruct().sub(a.as_matrix()).max_abs() <= tolerance::EIGEN_RECONSTRUCTION * scale
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition, LinalgError> {
    check_finite("sym_eigen", a.as_matrix())?;
    let n = a.dim();
    let mut w = a.as_matrix().clone();
    let mut v = Matrix::identity(n);

    let frob = w.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = f64::EPSILON * 1e-3 * frob;

    if n > 1 && frob > 0.0 {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm(&w) <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut w, &mut v, p, q);
                }
            }
        }
        let off = off_diagonal_norm(&w);
        if !converged && off > target {
            return Err(LinalgError::NoConvergence {
                sweeps: MAX_SWEEPS,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let eigenvalues = order.iter().map(|&k| w[(k, k)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only; convenience for certificate checks.
pub(crate) fn min_eigenvalue(a: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(sym_eigen(a)?.min())
}

fn off_diagonal_norm(w: &Matrix) -> f64 {
    let n = w.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += w[(i, j)] * w[(i, j)];
        }
    }
    (2.0 * s).sqrt()
}

/// Annihilates `w[p][q]` with `w ← Jᵀ w J`, accumulating `v ← v J`.
fn rotate(w: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = w.rows();
    let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = c * wkp - s * wkq;
        w[(k, q)] = s * wkp + c * wkq;
    }
    for k in 0..n {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = c * wpk - s * wqk;
        w[(q, k)] = s * wpk + c * wqk;
    }
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
