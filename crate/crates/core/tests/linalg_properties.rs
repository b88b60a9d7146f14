use natgrad_lens::experiments::random_hurwitz;
use natgrad_lens::linalg::vector::{dot, norm};
use natgrad_lens::linalg::{
    angle_between, general_eigenvalues, lu_solve, lyapunov_residual, orthonormal_complement_basis, solve_lyapunov,
    spectral_abscissa, sym_eigen, Matrix, SymMatrix,
};
use proptest::prelude::*;

fn sym_matrix(dim: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-10.0f64..10.0, dim * dim)
        .prop_map(move |v| SymMatrix::from_upper_fn(dim, |i, j| v[i * dim + j]))
}

fn nonzero_vec(dim: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    dim.prop_flat_map(|d| prop::collection::vec(-5.0f64..5.0, d))
        .prop_filter("nonzero", |v| norm(v) > 1e-3)
}

/// Plain Gaussian elimination with partial pivoting, kept separate from the
/// library LU so it can serve as an oracle.
#[allow(clippy::needless_range_loop)]
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Solves `PA + AᵀP = −Q` through the vectorized system
/// `(Aᵀ ⊗ I + I ⊗ Aᵀ) vec(P) = −vec(Q)`.
fn kronecker_lyapunov(a: &Matrix, q: &SymMatrix) -> Matrix {
    let n = a.rows();
    let mut k = vec![vec![0.0; n * n]; n * n];
    // vec index i + n j for entry (i, j)
    for i in 0..n {
        for j in 0..n {
            let row = i + n * j;
            for l in 0..n {
                // (PA)_{ij} = Σ_l P_{il} A_{lj}
                k[row][i + n * l] += a[(l, j)];
                // (AᵀP)_{ij} = Σ_l A_{li} P_{lj}
                k[row][l + n * j] += a[(l, i)];
            }
        }
    }
    let rhs: Vec<f64> = (0..n * n).map(|idx| -q.as_matrix()[(idx % n, idx / n)]).collect();
    let v = gauss_solve(k, rhs);
    Matrix::from_fn(n, n, |i, j| v[i + n * j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigendecomposition_invariants(a in (1usize..=8).prop_flat_map(sym_matrix)) {
        let e = sym_eigen(&a).unwrap();
        prop_assert!(e.orthogonality_defect() <= 1e-10);
        let scale = a.max_abs().max(1.0);
        prop_assert!(e.reconstruct().sub(a.as_matrix()).max_abs() <= 1e-9 * scale);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn random_five_by_five_reconstructs(a in sym_matrix(5)) {
        let e = sym_eigen(&a).unwrap();
        prop_assert!(e.reconstruct().sub(a.as_matrix()).max_abs() <= 1e-9 * a.max_abs().max(1.0));
        let trace: f64 = (0..5).map(|i| a.as_matrix()[(i, i)]).sum();
        prop_assert!((e.eigenvalues.iter().sum::<f64>() - trace).abs() <= 1e-9 * a.max_abs().max(1.0) * 5.0);
    }

    #[test]
    fn complement_gram_matrix_is_identity(g in nonzero_vec(1..=10)) {
        let basis = orthonormal_complement_basis(&g).unwrap();
        prop_assert_eq!(basis.len(), g.len() - 1);
        let gn: Vec<f64> = g.iter().map(|v| v / norm(&g)).collect();
        let mut all = vec![gn];
        all.extend(basis);
        for (i, u) in all.iter().enumerate() {
            for (j, v) in all.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(u, v) - expect).abs() <= 1e-12, "({i},{j}) = {}", dot(u, v));
            }
        }
    }

    #[test]
    fn angle_is_symmetric_and_matches_arccos(y in nonzero_vec(3..=3), g in nonzero_vec(3..=3)) {
        let a = angle_between(&y, &g).unwrap();
        prop_assert!((0.0..=std::f64::consts::PI).contains(&a));
        prop_assert_eq!(a, angle_between(&g, &y).unwrap());
        let c = (dot(&y, &g) / (norm(&y) * norm(&g))).clamp(-1.0, 1.0);
        prop_assert!((a.cos() - c).abs() <= 1e-12);
    }

    #[test]
    fn lyapunov_matches_kronecker_oracle(dim in 1usize..=6, seed in any::<u64>()) {
        let a = random_hurwitz(dim, seed).unwrap();
        let q = SymMatrix::identity(dim);
        let p = solve_lyapunov(&a, &q).unwrap();
        prop_assert!(lyapunov_residual(&a, &p, &q) <= 1e-9);
        prop_assert!(sym_eigen(&p).unwrap().min() > 0.0);
        let oracle = kronecker_lyapunov(&a, &q);
        let scale = oracle.max_abs().max(1.0);
        prop_assert!(p.as_matrix().sub(&oracle).max_abs() <= 1e-8 * scale);
    }

    #[test]
    fn lyapunov_loss_decreases_along_flow(dim in 1usize..=6, seed in any::<u64>(), theta in prop::collection::vec(-3.0f64..3.0, 6)) {
        let a = random_hurwitz(dim, seed).unwrap();
        let p = solve_lyapunov(&a, &SymMatrix::identity(dim)).unwrap();
        let theta = &theta[..dim];
        prop_assume!(norm(theta) > 1e-6);
        // dL/dt = 2 θᵀ P A θ = −θᵀθ
        let dl = 2.0 * dot(theta, &p.mul_vec(&a.mul_vec(theta)));
        prop_assert!(dl < 0.0);
        prop_assert!((dl + dot(theta, theta)).abs() <= 1e-8 * dot(theta, theta).max(1.0) * p.max_abs().max(1.0));
    }

    #[test]
    fn random_hurwitz_abscissa_is_minus_half(dim in 1usize..=8, seed in any::<u64>()) {
        let a = random_hurwitz(dim, seed).unwrap();
        prop_assert!((spectral_abscissa(&a).unwrap() + 0.5).abs() <= 1e-8);
    }

    #[test]
    fn general_eigenvalues_sum_to_trace(v in prop::collection::vec(-4.0f64..4.0, 36)) {
        let a = Matrix::from_row_major(6, 6, v).unwrap();
        let ev = general_eigenvalues(&a).unwrap();
        let trace: f64 = (0..6).map(|i| a[(i, i)]).sum();
        let (re, im) = ev.iter().fold((0.0, 0.0), |(r, i), (a, b)| (r + a, i + b));
        prop_assert!((re - trace).abs() <= 1e-8 * a.max_abs().max(1.0) * 6.0);
        prop_assert!(im.abs() <= 1e-8 * a.max_abs().max(1.0) * 6.0);
    }

    #[test]
    fn lu_solve_agrees_with_oracle(v in prop::collection::vec(-4.0f64..4.0, 25), b in prop::collection::vec(-4.0f64..4.0, 5)) {
        let a = Matrix::from_row_major(5, 5, v.clone()).unwrap();
        let rows: Vec<Vec<f64>> = v.chunks(5).map(<[f64]>::to_vec).collect();
        if let Ok(x) = lu_solve(&a, &b) {
            let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            prop_assume!(norm(&x) < 1e6);
            prop_assert!(norm(&r) <= 1e-8 * norm(&x).max(1.0) * a.max_abs().max(1.0));
            let o = gauss_solve(rows, b);
            prop_assert!(norm(&x.iter().zip(&o).map(|(p, q)| p - q).collect::<Vec<_>>()) <= 1e-6 * norm(&o).max(1.0));
        }
    }
}

#[test]
fn two_by_two_upper_triangular_lyapunov() {
    let a = Matrix::from_rows(&[[-1.0, 1.0], [0.0, -2.0]]).unwrap();
    let q = SymMatrix::identity(2);
    let p = solve_lyapunov(&a, &q).unwrap();
    let oracle = kronecker_lyapunov(&a, &q);
    assert!(p.as_matrix().sub(&oracle).max_abs() <= 1e-12);
    assert!(sym_eigen(&p).unwrap().min() > 0.0);
}

#[test]
fn unstable_system_is_refused() {
    let a = Matrix::from_rows(&[[0.5, 0.0], [0.0, -1.0]]).unwrap();
    assert!(solve_lyapunov(&a, &SymMatrix::identity(2)).is_err());
}
