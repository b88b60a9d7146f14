use super::{check_finite, eigen::min_eigenvalue, LinalgError, LuFactorization, Matrix, SymMatrix};
use crate::tolerance;

/// `‖P A + Aᵀ P + Q‖_max`
pub fn lyapunov_residual(a: &Matrix, p: &SymMatrix, q: &SymMatrix) -> f64 {
    let pa = p.as_matrix().matmul(a);
    let atp = a.transpose().matmul(p.as_matrix());
    pa.add(&atp).add(q.as_matrix()).max_abs()
}

/// Solves the continuous Lyapunov equation `P A + Aᵀ P = −Q` for symmetric `P`.
///
/// The equation is vectorized column-major as
/// `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = −vec(Q)` and solved by dense LU, so the cost is
/// `O(D⁶)`; intended for `D` up to about 50. The returned `P` is certified
/// against the residual bound and checked positive definite, which for a
/// positive definite `Q` holds exactly when `A` is Hurwitz.
pub fn solve_lyapunov(a: &Matrix, q: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    if !a.is_square() || a.rows() == 0 {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if q.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            context: "solve_lyapunov q",
            expected: n,
            found: q.dim(),
            index: None,
        });
    }
    check_finite("solve_lyapunov a", a)?;
    check_finite("solve_lyapunov q", q.as_matrix())?;

    let nn = n * n;
    let mut k = Matrix::zeros(nn, nn);
    // row (i, j) ↦ i + j n, column (r, l) ↦ r + l n
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for r in 0..n {
                // I ⊗ Aᵀ : δ_jl A[r][i]
                k[(row, r + j * n)] += a[(r, i)];
            }
            for l in 0..n {
                // Aᵀ ⊗ I : A[l][j] δ_ir
                k[(row, i + l * n)] += a[(l, j)];
            }
        }
    }
    let mut rhs = vec![0.0; nn];
    for j in 0..n {
        for i in 0..n {
            rhs[i + j * n] = -q[(i, j)];
        }
    }
    let lu = LuFactorization::new(&k).map_err(|e| match e {
        LinalgError::Singular { pivot, .. } => LinalgError::LyapunovCertificate {
            certificate: "unique solution (A has eigenvalues summing to zero)",
            value: pivot,
            bound: tolerance::LU_PIVOT,
        },
        other => other,
    })?;
    let x = lu.solve(&rhs);
    let p_full = Matrix::from_fn(n, n, |i, j| x[i + j * n]);
    let p = SymMatrix::symmetrize(&p_full)?;

    let bound = tolerance::LYAPUNOV_RESIDUAL * q.max_abs();
    let res = lyapunov_residual(a, &p, q);
    if !(res <= bound) {
        return Err(LinalgError::LyapunovCertificate {
            certificate: "residual",
            value: res,
            bound,
        });
    }
    let lmin = min_eigenvalue(&p)?;
    if !(lmin > 0.0) {
        return Err(LinalgError::LyapunovCertificate {
            certificate: "P positive definite",
            value: lmin,
            bound: 0.0,
        });
    }
    Ok(p)
}
