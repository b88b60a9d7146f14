use super::{check_finite, LinalgError, Matrix};

/// Eigenvalues of a general real square matrix as `(re, im)` pairs.
///
/// Gaussian-elimination reduction to upper Hessenberg form followed by the
/// Francis double-shift QR iteration. No eigenvectors.
pub fn general_eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    check_finite("general_eigenvalues", a)?;
    let n = a.rows();
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    to_hessenberg(&mut h);
    for (i, row) in h.iter_mut().enumerate() {
        for v in row.iter_mut().take(i.saturating_sub(1)) {
            *v = 0.0;
        }
    }
    hessenberg_qr(h)
}

/// `max Re λ(A)`
pub fn spectral_abscissa(a: &Matrix) -> Result<f64, LinalgError> {
    Ok(general_eigenvalues(a)?
        .iter()
        .map(|e| e.0)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn to_hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0f64;
        let mut i = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut() {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..n {
                        a[i][j] -= y * a[m][j];
                    }
                    for row in a.iter_mut() {
                        row[m] += y * row[i];
                    }
                }
            }
        }
    }
}

fn hessenberg_qr(mut a: Vec<Vec<f64>>) -> Result<Vec<(f64, f64)>, LinalgError> {
    let n = a.len() as isize;
    let mut out = vec![(0.0, 0.0); n as usize];
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += a[i as usize][j as usize].abs();
        }
    }
    macro_rules! at {
        ($i:expr, $j:expr) => {
            a[($i) as usize][($j) as usize]
        };
    }
    let mut nn = n - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                let mut s = at!(l - 1, l - 1).abs() + at!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at!(l, l - 1).abs() <= eps * s {
                    at!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = at!(nn, nn);
            if l == nn {
                out[nn as usize] = (x + t, 0.0);
                nn -= 1;
            } else {
                y = at!(nn - 1, nn - 1);
                w = at!(nn, nn - 1) * at!(nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        let hi = x + z;
                        let lo = if z != 0.0 { x - w / z } else { hi };
                        out[(nn - 1) as usize] = (hi, 0.0);
                        out[nn as usize] = (lo, 0.0);
                    } else {
                        out[nn as usize] = (x + p, -z);
                        out[(nn - 1) as usize] = (x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(LinalgError::NoConvergence {
                            sweeps: its,
                            off_norm: at!(nn, nn - 1).abs(),
                        });
                    }
                    if its == 10 || its == 20 {
                        // exceptional shift
                        t += x;
                        for i in 0..=nn {
                            at!(i, i) -= x;
                        }
                        let s = at!(nn, nn - 1).abs() + at!(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    while m >= l {
                        z = at!(m, m);
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / at!(m + 1, m) + at!(m, m + 1);
                        q = at!(m + 1, m + 1) - z - r - s;
                        r = at!(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = at!(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..(nn - 1) {
                        at!(i + 2, i) = 0.0;
                        if i != m {
                            at!(i + 2, i - 1) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = at!(k, k - 1);
                            q = at!(k + 1, k - 1);
                            r = if k + 1 != nn { at!(k + 2, k - 1) } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    at!(k, k - 1) = -at!(k, k - 1);
                                }
                            } else {
                                at!(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = at!(k, j) + q * at!(k + 1, j);
                                if k + 1 != nn {
                                    p += r * at!(k + 2, j);
                                    at!(k + 2, j) -= p * z;
                                }
                                at!(k + 1, j) -= p * y;
                                at!(k, j) -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * at!(i, k) + y * at!(i, k + 1);
                                if k + 1 != nn {
                                    p += z * at!(i, k + 2);
                                    at!(i, k + 2) -= p * r;
                                }
                                at!(i, k + 1) -= p * q;
                                at!(i, k) -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LuFactorization;
    use approx::assert_abs_diff_eq;

    fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        let e = sorted(general_eigenvalues(&a).unwrap());
        assert_abs_diff_eq!(e[0].0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[0].1, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1].1, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn triangular_gives_diagonal() {
        let a = Matrix::from_rows(&[[-1.0, 2.0, 5.0], [0.0, -3.0, 1.0], [0.0, 0.0, 4.0]]).unwrap();
        let e = sorted(general_eigenvalues(&a).unwrap());
        for (got, want) in e.iter().zip([-3.0, -1.0, 4.0]) {
            assert_abs_diff_eq!(got.0, want, epsilon = 1e-13);
            assert_abs_diff_eq!(got.1, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // x³ − 6x² + 11x − 6 = (x−1)(x−2)(x−3)
        let a = Matrix::from_rows(&[[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let e = sorted(general_eigenvalues(&a).unwrap());
        for (got, want) in e.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(got.0, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn trace_and_determinant_match() {
        let a = Matrix::from_fn(7, 7, |i, j| {
            ((i * 7 + j) as f64 * 0.731).sin() + if i == j { 0.5 } else { 0.0 }
        });
        let e = general_eigenvalues(&a).unwrap();
        let tr: f64 = (0..7).map(|i| a[(i, i)]).sum();
        let sum_re: f64 = e.iter().map(|v| v.0).sum();
        let sum_im: f64 = e.iter().map(|v| v.1).sum();
        assert_abs_diff_eq!(sum_re, tr, epsilon = 1e-11);
        assert_abs_diff_eq!(sum_im, 0.0, epsilon = 1e-11);

        let (mut pr, mut pi) = (1.0, 0.0);
        for &(re, im) in &e {
            (pr, pi) = (pr * re - pi * im, pr * im + pi * re);
        }
        let lu = LuFactorization::new(&a).unwrap();
        assert_abs_diff_eq!(pr, lu.determinant(), epsilon = 1e-10 * lu.determinant().abs().max(1.0));
        assert_abs_diff_eq!(pi, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn one_by_one_and_empty() {
        let a = Matrix::from_rows(&[[2.5]]).unwrap();
        assert_eq!(general_eigenvalues(&a).unwrap(), vec![(2.5, 0.0)]);
        assert!(general_eigenvalues(&Matrix::zeros(2, 3)).is_err());
    }
}
