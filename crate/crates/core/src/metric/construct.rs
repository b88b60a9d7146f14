use serde::{Deserialize, Serialize};

use super::{MetricError, UpdateGradientPair};
use crate::linalg::vector::{dot, norm, sub};
use crate::linalg::{orthonormal_complement_basis, sym_eigen, EigenDecomposition, Matrix, SymMatrix};
use crate::tolerance;

/// Certificates attached to every constructed [`Metric`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCertificates {
    /// `‖Mg − y‖ / ‖y‖`
    pub map_residual: f64,
    pub min_eigenvalue: f64,
}

/// A symmetric positive definite `M` with `M g = y` for its pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metric {
    matrix: SymMatrix,
    pair: UpdateGradientPair,
    gamma: Option<f64>,
    certificates: MetricCertificates,
}

impl Metric {
    /// Wraps an arbitrary matrix after checking that it is a valid metric
    /// for `pair`.
    pub fn certify(pair: UpdateGradientPair, matrix: SymMatrix, gamma: Option<f64>) -> Result<Self, MetricError> {
        if matrix.dim() != pair.dim() {
            return Err(MetricError::DimensionMismatch {
                expected: pair.dim(),
                found: matrix.dim(),
            });
        }
        let map_residual = norm(&sub(&matrix.mul_vec(pair.g()), pair.y())) / norm(pair.y());
        if !(map_residual <= tolerance::METRIC_MAP_RESIDUAL) {
            return Err(MetricError::Certificate {
                certificate: "map residual ‖Mg − y‖/‖y‖",
                value: map_residual,
                bound: tolerance::METRIC_MAP_RESIDUAL,
            });
        }
        let min_eigenvalue = sym_eigen(&matrix)?.min();
        if !(min_eigenvalue > 0.0) {
            return Err(MetricError::Certificate {
                certificate: "positive definiteness λ_min(M) > 0",
                value: min_eigenvalue,
                bound: 0.0,
            });
        }
        Ok(Self {
            matrix,
            pair,
            gamma,
            certificates: MetricCertificates {
                map_residual,
                min_eigenvalue,
            },
        })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn pair(&self) -> &UpdateGradientPair {
        &self.pair
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn certificates(&self) -> MetricCertificates {
        self.certificates
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Numerical spectrum of the matrix.
    pub fn eigen(&self) -> EigenDecomposition {
        sym_eigen(&self.matrix).expect("certified metric has finite entries")
    }

    /// `λ_max / λ_min` from the numerical spectrum.
    pub fn condition_number(&self) -> f64 {
        let e = self.eigen();
        e.max() / e.min()
    }
}

/// `yyᵀ / (yᵀg)`, the part every valid metric shares.
pub(crate) fn rank_one_part(pair: &UpdateGradientPair) -> SymMatrix {
    let a = pair.alignment();
    let y = pair.y();
    SymMatrix::from_upper_fn(pair.dim(), |i, j| y[i] * y[j] / a)
}

/// Complement basis of `g` as the columns of a `D × (D−1)` matrix.
pub(crate) fn complement_matrix(g: &[f64]) -> Result<Matrix, MetricError> {
    let basis = orthonormal_complement_basis(g)?;
    let n = g.len();
    Ok(Matrix::from_fn(n, n - 1, |i, k| basis[k][i]))
}

/// `M = yyᵀ/(yᵀg) + Σ wᵢ uᵢuᵢᵀ` over an orthonormal basis `{uᵢ}` of `g⊥`.
///
/// Weights default to one.
pub fn build_canonical_metric(pair: &UpdateGradientPair, weights: Option<&[f64]>) -> Result<Metric, MetricError> {
    pair.require_aligned()?;
    let n = pair.dim();
    if let Some(w) = weights {
        if w.len() != n - 1 {
            return Err(MetricError::DimensionMismatch {
                expected: n - 1,
                found: w.len(),
            });
        }
        if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(MetricError::InvalidWeight { index, value });
        }
    }
    let basis = orthonormal_complement_basis(pair.g())?;
    let a = pair.alignment();
    let y = pair.y();
    let matrix = SymMatrix::from_upper_fn(n, |i, j| {
        let mut v = y[i] * y[j] / a;
        for (k, u) in basis.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[k]);
            v += w * u[i] * u[j];
        }
        v
    });
    Metric::certify(pair.clone(), matrix, None)
}

/// `M = yyᵀ/(yᵀg) + U C Uᵀ` for an arbitrary positive definite operator `C`
/// on `g⊥`, expressed in the orthonormal complement basis `U`.
///
/// Together with [`build_canonical_metric`] this spans every valid metric.
pub fn build_metric_with_complement(pair: &UpdateGradientPair, complement: &SymMatrix) -> Result<Metric, MetricError> {
    pair.require_aligned()?;
    let n = pair.dim();
    if n == 1 {
        return Err(MetricError::DimensionMismatch {
            expected: 0,
            found: complement.dim(),
        });
    }
    if complement.dim() != n - 1 {
        return Err(MetricError::DimensionMismatch {
            expected: n - 1,
            found: complement.dim(),
        });
    }
    let cmin = sym_eigen(complement)?.min();
    if !(cmin > 0.0) {
        return Err(MetricError::Certificate {
            certificate: "complement operator positive definite",
            value: cmin,
            bound: 0.0,
        });
    }
    let u = complement_matrix(pair.g())?;
    let ucut = complement.congruence(&u.transpose());
    Metric::certify(pair.clone(), rank_one_part(pair).add(&ucut), None)
}

/// One-parameter family
/// `M_γ = yyᵀ/(yᵀg) + γ (yᵀy)/(yᵀg) (I − ggᵀ/(gᵀg))`.
pub fn build_family_metric(pair: &UpdateGradientPair, gamma: f64) -> Result<Metric, MetricError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(MetricError::InvalidGamma(gamma));
    }
    pair.require_aligned()?;
    let a = pair.alignment();
    let (g, y) = (pair.g(), pair.y());
    let alpha = gamma * dot(y, y) / a;
    let gg = dot(g, g);
    let matrix = SymMatrix::from_upper_fn(pair.dim(), |i, j| {
        let proj = if i == j { 1.0 } else { 0.0 } - g[i] * g[j] / gg;
        y[i] * y[j] / a + alpha * proj
    });
    Metric::certify(pair.clone(), matrix, Some(gamma))
}

/// `M_γ v` without forming the matrix. Used where `D` is too large for a
/// dense metric.
pub fn apply_family_metric(pair: &UpdateGradientPair, gamma: f64, v: &[f64]) -> Result<Vec<f64>, MetricError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(MetricError::InvalidGamma(gamma));
    }
    if v.len() != pair.dim() {
        return Err(MetricError::DimensionMismatch {
            expected: pair.dim(),
            found: v.len(),
        });
    }
    pair.require_aligned()?;
    let a = pair.alignment();
    let (g, y) = (pair.g(), pair.y());
    let alpha = gamma * dot(y, y) / a;
    let yv = dot(y, v) / a;
    let gv = dot(g, v) / dot(g, g);
    Ok(v.iter()
        .zip(g)
        .zip(y)
        .map(|((vi, gi), yi)| yi * yv + alpha * (vi - gi * gv))
        .collect())
}

/// The family member with `γ = 1`, which has the smallest condition number
/// among all valid metrics.
pub fn optimal_metric(pair: &UpdateGradientPair) -> Result<Metric, MetricError> {
    build_family_metric(pair, 1.0)
}

/// Splitting of a metric into its shared rank-one part and the remainder
/// `M' = M − yyᵀ/(yᵀg)`, which must vanish on `g` and be positive on `g⊥`.
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub m_prime: SymMatrix,
    /// `‖M'g‖ / ‖g‖`
    pub residual_on_g: f64,
    /// Smallest eigenvalue of `Uᵀ M' U`; `None` when `D = 1`.
    pub min_eig_on_complement: Option<f64>,
}

pub fn canonical_decomposition(m: &Metric) -> Result<CanonicalDecomposition, MetricError> {
    let pair = m.pair();
    let m_prime = m.matrix().sub(&rank_one_part(pair));
    let residual_on_g = norm(&m_prime.mul_vec(pair.g())) / norm(pair.g());
    let min_eig_on_complement = if pair.dim() > 1 {
        let u = complement_matrix(pair.g())?;
        Some(sym_eigen(&m_prime.congruence(&u))?.min())
    } else {
        None
    };
    Ok(CanonicalDecomposition {
        m_prime,
        residual_on_g,
        min_eig_on_complement,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaturalGradientCheck {
    pub is_valid: bool,
    /// `‖Mg − y‖ / ‖y‖`
    pub map_residual: f64,
    /// Of the symmetric part of `M`.
    pub min_eigenvalue: f64,
    pub symmetry_defect: f64,
}

/// Checks whether `g = −M⁻¹∇L` with `M` symmetric positive definite.
pub fn verify_natural_gradient_form(
    pair: &UpdateGradientPair,
    m: &Matrix,
) -> Result<NaturalGradientCheck, MetricError> {
    if m.rows() != pair.dim() || m.cols() != pair.dim() {
        return Err(MetricError::DimensionMismatch {
            expected: pair.dim(),
            found: m.rows().max(m.cols()),
        });
    }
    let map_residual = norm(&sub(&m.mul_vec(pair.g()), pair.y())) / norm(pair.y());
    let symmetry_defect = m.symmetry_defect();
    let min_eigenvalue = sym_eigen(&SymMatrix::symmetrize(m)?)?.min();
    let is_valid = map_residual <= tolerance::VERIFY_MAP_RESIDUAL
        && min_eigenvalue > 0.0
        && symmetry_defect <= tolerance::VERIFY_SYMMETRY_DEFECT;
    Ok(NaturalGradientCheck {
        is_valid,
        map_residual,
        min_eigenvalue,
        symmetry_defect,
    })
}
