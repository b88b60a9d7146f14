//! Seeded generators for test pairs, positive definite matrices and random
//! valid metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::vector::{dot, norm, scale};
use crate::linalg::{Matrix, SymMatrix};
use crate::metric::{build_metric_with_complement, Metric, MetricError, UpdateGradientPair};

/// Deterministic generator used across the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `exp(U(ln lo, ln hi))`
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

/// Pair with a random `g`, angle exactly `psi` between `g` and `y` up to
/// rounding, and `‖y‖/‖g‖ = ratio`. For `D = 1` only `psi = 0` is possible.
pub fn random_pair(rng: &mut impl Rng, dim: usize, psi: f64, ratio: f64) -> Result<UpdateGradientPair, MetricError> {
    if dim == 0 {
        return Err(MetricError::InvalidPair("dimension must be at least 1".into()));
    }
    if dim == 1 && psi != 0.0 {
        return Err(MetricError::InvalidAngle(psi));
    }
    let g = loop {
        let g = gaussian_vec(rng, dim);
        if norm(&g) > 1e-3 {
            break g;
        }
    };
    let gn = norm(&g);
    let ghat = scale(&g, 1.0 / gn);
    let target = ratio * gn;
    if dim == 1 {
        return UpdateGradientPair::new(g, scale(&ghat, target));
    }
    let u = loop {
        let w = gaussian_vec(rng, dim);
        let c = dot(&w, &ghat);
        let w: Vec<f64> = w.iter().zip(&ghat).map(|(a, b)| a - c * b).collect();
        let n = norm(&w);
        if n > 1e-3 {
            break scale(&w, 1.0 / n);
        }
    };
    let (s, c) = psi.sin_cos();
    let y = ghat.iter().zip(&u).map(|(a, b)| target * (c * a + s * b)).collect();
    UpdateGradientPair::new(g, y)
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign convention that makes the distribution uniform).
pub fn random_orthogonal(rng: &mut impl Rng, dim: usize) -> Matrix {
    let a = gaussian_matrix(rng, dim, dim);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v = a.column(j);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &cols {
                let c = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let n = norm(&v);
        cols.push(scale(&v, 1.0 / n));
    }
    Matrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// `Q diag(λ) Qᵀ` with eigenvalues log-uniform in `[lo, hi]`.
pub fn random_spd(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> SymMatrix {
    let eig: Vec<f64> = (0..dim).map(|_| log_uniform(rng, lo, hi)).collect();
    let q = random_orthogonal(rng, dim);
    SymMatrix::diagonal(&eig).congruence(&q.transpose())
}

/// Random valid metric for an aligned pair: a random positive definite
/// operator on `g⊥` with eigenvalues log-uniform in `[lo, hi]`.
pub fn random_canonical_metric(
    rng: &mut impl Rng,
    pair: &UpdateGradientPair,
    lo: f64,
    hi: f64,
) -> Result<Metric, MetricError> {
    let n = pair.dim();
    if n == 1 {
        return crate::metric::build_canonical_metric(pair, None);
    }
    let c = random_spd(rng, n - 1, lo, hi);
    build_metric_with_complement(pair, &c)
}

/// A random positive definite `M` and `g`, with `y = Mg`. Every metric
/// arises this way, so this samples valid metrics without using the
/// construction under test.
pub fn random_valid_metric(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> Result<Metric, MetricError> {
    let m = random_spd(rng, dim, lo, hi);
    let g = gaussian_vec(rng, dim);
    let y = m.mul_vec(&g);
    let pair = UpdateGradientPair::new(g, y)?;
    Metric::certify(pair, m, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pair_has_requested_geometry() {
        let mut rng = seeded_rng(7);
        for dim in [2, 3, 10] {
            let p = random_pair(&mut rng, dim, 0.7, 2.5).unwrap();
            assert_relative_eq!(p.psi(), 0.7, max_relative = 1e-12);
            assert_relative_eq!(p.norm_ratio(), 2.5, max_relative = 1e-12);
        }
        assert!(random_pair(&mut rng, 1, 0.3, 1.0).is_err());
        assert_relative_eq!(
            random_pair(&mut rng, 1, 0.0, 3.0).unwrap().norm_ratio(),
            3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = random_orthogonal(&mut seeded_rng(1), 6);
        let qtq = q.transpose().matmul(&q);
        assert!(qtq.sub(&Matrix::identity(6)).max_abs() < 1e-13);
    }

    #[test]
    fn same_seed_same_draws() {
        let a = random_spd(&mut seeded_rng(3), 4, 0.1, 10.0);
        let b = random_spd(&mut seeded_rng(3), 4, 0.1, 10.0);
        assert_eq!(a, b);
    }
}
