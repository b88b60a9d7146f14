//! Vector helpers over plain slices.

use super::{check_finite_vec, LinalgError};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm. Rescales by the largest component when squaring would
/// overflow or underflow.
pub fn norm(a: &[f64]) -> f64 {
    let big = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if big == 0.0 || !big.is_finite() || (1e-150..1e150).contains(&big) {
        return dot(a, a).sqrt();
    }
    let s: f64 = a.iter().map(|v| (v / big) * (v / big)).sum();
    big * s.sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s·b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| a.iter().map(|x| x / n).collect())
}

/// Neumaier-compensated sum; independent of how the caller batched inputs
/// up to rounding of the final result.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Componentwise compensated mean of equal-length vectors.
pub fn compensated_mean<'a>(vs: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> Vec<f64> {
    let count = vs.clone().count();
    (0..dim)
        .map(|k| compensated_sum(vs.clone().map(|v| v[k])) / count as f64)
        .collect()
}

/// Sine and cosine of the angle between `y` and `g`.
///
/// Uses `ψ = 2 atan2(‖ŷ − ĝ‖, ‖ŷ + ĝ‖)`, which stays accurate for nearly
/// parallel and nearly antiparallel vectors and is exactly zero when the
/// normalized vectors coincide.
pub fn sin_cos_between(y: &[f64], g: &[f64]) -> Result<(f64, f64), LinalgError> {
    if y.len() != g.len() {
        return Err(LinalgError::DimensionMismatch {
            context: "angle_between",
            expected: g.len(),
            found: y.len(),
            index: None,
        });
    }
    check_finite_vec("angle_between y", y)?;
    check_finite_vec("angle_between g", g)?;
    let yh = normalized(y).ok_or(LinalgError::ZeroVector {
        context: "angle_between y",
    })?;
    let gh = normalized(g).ok_or(LinalgError::ZeroVector {
        context: "angle_between g",
    })?;
    let psi = 2.0 * norm(&sub(&yh, &gh)).atan2(norm(&add(&yh, &gh)));
    Ok(psi.sin_cos())
}

/// Angle ψ ∈ [0, π] between `y` and `g`.
pub fn angle_between(y: &[f64], g: &[f64]) -> Result<f64, LinalgError> {
    let (sin, cos) = sin_cos_between(y, g)?;
    Ok(sin.atan2(cos))
}

/// `D − 1` orthonormal vectors spanning the orthogonal complement of `g`.
///
/// Taken from the trailing columns of the Householder reflector that maps
/// `g` onto a multiple of `e₁`.
pub fn orthonormal_complement_basis(g: &[f64]) -> Result<Vec<Vec<f64>>, LinalgError> {
    check_finite_vec("orthonormal_complement_basis", g)?;
    let n = g.len();
    let gn = norm(g);
    if gn == 0.0 || n == 0 {
        return Err(LinalgError::ZeroVector {
            context: "orthonormal_complement_basis",
        });
    }
    let mut v = g.to_vec();
    let sign = if g[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign * gn;
    let vtv = dot(&v, &v);
    // column k of I − 2 v vᵀ / vᵀv, for k = 1..n
    Ok((1..n)
        .map(|k| {
            let c = 2.0 * v[k] / vtv;
            (0..n)
                .map(|i| if i == k { 1.0 - c * v[i] } else { -c * v[i] })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn angle_examples() {
        assert_abs_diff_eq!(angle_between(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            angle_between(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            FRAC_PI_4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            angle_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            angle_between(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-15
        );
    }

    #[test]
    fn angle_rejects_zero_and_mismatch() {
        assert!(matches!(
            angle_between(&[0.0, 0.0], &[1.0, 0.0]),
            Err(LinalgError::ZeroVector { .. })
        ));
        assert!(angle_between(&[1.0], &[1.0, 0.0]).is_err());
        assert!(angle_between(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn small_angles_resolved() {
        // arccos would round this to 0 or lose half the digits
        let eps = 1e-10;
        let psi = angle_between(&[1.0, eps], &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(psi, eps, epsilon = 1e-24);
    }

    #[test]
    fn complement_axis_case() {
        let u = orthonormal_complement_basis(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(u.len(), 2);
        for v in &u {
            assert_eq!(v[0], 0.0);
            assert_abs_diff_eq!(norm(v), 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(dot(&u[0], &u[1]), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn complement_two_d() {
        let s = 0.5f64.sqrt();
        let u = orthonormal_complement_basis(&[s, s]).unwrap();
        assert_eq!(u.len(), 1);
        assert_abs_diff_eq!(u[0][0].abs(), s, epsilon = 1e-15);
        assert_abs_diff_eq!(u[0][0], -u[0][1], epsilon = 1e-15);
    }

    #[test]
    fn complement_of_scalar_is_empty() {
        assert!(orthonormal_complement_basis(&[-3.0]).unwrap().is_empty());
        assert!(orthonormal_complement_basis(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn norm_survives_extreme_magnitudes() {
        assert_eq!(norm(&[3e300, 4e300]), 5e300);
        let tiny = f64::MIN_POSITIVE / 4.0;
        assert!((norm(&[tiny, 0.0]) / tiny - 1.0).abs() < 1e-12);
        assert!(normalized(&[1e-320, -1e-320]).is_some());
    }
}
