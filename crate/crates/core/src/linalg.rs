//! Norms, induced operator norms and conditioning for small dense systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Matrices with a reciprocal condition number below this are treated as
/// singular.
pub const SINGULAR_RCOND: f64 = 1e3 * f64::EPSILON;

/// Relative change at which power iteration stops.
pub const POWER_TOL: f64 = 1e-10;

const POWER_MAX_ITER: usize = 10_000;

/// Vector norm used for distances and preconditioned residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Euclidean,
    /// `‖v‖ = √(vᵀ M v)` for a symmetric positive definite `M`.
    Metric { matrix: Vec<Vec<f64>> },
}

/// A realised [`NormSpec`]. For a metric `M = C Cᵀ` (Cholesky), vectors are
/// mapped to Euclidean coordinates by `w = Cᵀ v`.
#[derive(Debug, Clone)]
pub struct Norm {
    spec: NormSpec,
    // Cᵀ, upper triangular; None for the Euclidean norm
    factor: Option<DMatrix<f64>>,
}

impl Norm {
    pub fn euclidean() -> Self {
        Self {
            spec: NormSpec::Euclidean,
            factor: None,
        }
    }

    pub fn new(spec: &NormSpec, dim: usize) -> Result<Self> {
        match spec {
            NormSpec::Euclidean => Ok(Self::euclidean()),
            NormSpec::Metric { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                    return Err(Error::Problem(format!(
                        "metric must be {dim}x{dim}, got {} rows",
                        matrix.len()
                    )));
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| matrix[i][j]);
                let asym = (&m - m.transpose()).amax();
                if asym > 1e-12 * m.amax().max(1.0) {
                    return Err(Error::Problem(format!("metric is not symmetric (gap {asym:e})")));
                }
                let chol = nalgebra::Cholesky::new(m)
                    .ok_or_else(|| Error::Problem("metric is not positive definite".into()))?;
                Ok(Self {
                    spec: spec.clone(),
                    factor: Some(chol.l().transpose()),
                })
            }
        }
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        match &self.factor {
            None => v.norm(),
            Some(c) => (c * v).norm(),
        }
    }

    /// Euclidean coordinates of `v`.
    pub fn to_euclidean(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            None => v.clone(),
            Some(c) => c * v,
        }
    }

    /// Inverse of [`Norm::to_euclidean`].
    pub fn from_euclidean(&self, w: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            None => w.clone(),
            Some(c) => c
                .solve_upper_triangular(w)
                .expect("Cholesky factor has a positive diagonal"),
        }
    }

    /// `a` expressed in Euclidean coordinates: `Cᵀ a C⁻ᵀ`.
    pub fn conjugate(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.factor {
            None => a.clone(),
            Some(c) => {
                let ca = c * a;
                // (Cᵀ a) C⁻ᵀ = X  <=>  Xᵀ = C⁻¹ (Cᵀ a)ᵀ, solved with the upper factor
                let xt = c
                    .transpose()
                    .solve_lower_triangular(&ca.transpose())
                    .expect("Cholesky factor has a positive diagonal");
                xt.transpose()
            }
        }
    }

    /// Operator norm of `a` induced by this norm on both sides, by power
    /// iteration on `BᵀB` with `B` the conjugated matrix.
    pub fn operator_norm(&self, a: &DMatrix<f64>) -> f64 {
        power_norm(&self.conjugate(a))
    }

    /// Unit vector (in this norm) along the all-ones direction.
    pub fn unit_ones(&self, dim: usize) -> DVector<f64> {
        let ones = DVector::from_element(dim, 1.0);
        let n = self.norm(&ones);
        ones / n
    }
}

/// Spectral norm by power iteration on `BᵀB`, stopping when the estimate
/// changes by less than [`POWER_TOL`] relatively.
pub fn power_norm(b: &DMatrix<f64>) -> f64 {
    let n = b.ncols();
    if n == 0 {
        return 0.0;
    }
    let gram = b.transpose() * b;
    // deterministic start with unequal weights so it is not orthogonal to
    // the dominant singular vector by symmetry
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i + 1) as f64).sqrt());
    v /= v.norm();
    let mut estimate = (b * &v).norm();
    for _ in 0..POWER_MAX_ITER {
        let w = &gram * &v;
        let len = w.norm();
        if len == 0.0 {
            return 0.0;
        }
        v = w / len;
        let next = (b * &v).norm();
        let done = (next - estimate).abs() <= POWER_TOL * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Reciprocal 2-norm condition number `σ_min/σ_max`.
pub fn rcond(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 || !max.is_finite() {
        return 0.0;
    }
    sv.min() / max
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn metric_norm_matches_quadratic_form() {
        let spec = NormSpec::Metric {
            matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
        };
        let norm = Norm::new(&spec, 2).unwrap();
        let v = DVector::from_vec(vec![0.3, -1.2]);
        let q = 2.0 * 0.09 + 2.0 * 0.5 * 0.3 * -1.2 + 1.44;
        assert_relative_eq!(norm.norm(&v), f64::sqrt(q), max_relative = 1e-14);
        let back = norm.from_euclidean(&norm.to_euclidean(&v));
        assert_relative_eq!(back, v, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_metrics() {
        let asym = NormSpec::Metric {
            matrix: vec![vec![1.0, 0.2], vec![0.0, 1.0]],
        };
        assert!(Norm::new(&asym, 2).is_err());
        let indefinite = NormSpec::Metric {
            matrix: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        };
        assert!(Norm::new(&indefinite, 2).is_err());
        assert!(Norm::new(&NormSpec::Metric { matrix: vec![vec![1.0]] }, 2).is_err());
    }

    #[test]
    fn power_iteration_agrees_with_svd() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 1.0, 0.0, 2.0]);
        let svd_max = a.clone().svd(false, false).singular_values.max();
        assert_relative_eq!(power_norm(&a), svd_max, max_relative = 1e-9);
        assert_relative_eq!(power_norm(&a), 3.0, max_relative = 1e-9);
    }

    #[test]
    fn induced_norm_by_definition() {
        // max over unit vectors of ‖A v‖_M / ‖v‖_M, sampled on a circle
        let spec = NormSpec::Metric {
            matrix: vec![vec![3.0, 1.0], vec![1.0, 2.0]],
        };
        let norm = Norm::new(&spec, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 0.7]);
        let sampled = (0..200_000)
            .map(|i| {
                let phi = std::f64::consts::PI * i as f64 / 200_000.0;
                let v = DVector::from_vec(vec![phi.cos(), phi.sin()]);
                norm.norm(&(&a * &v)) / norm.norm(&v)
            })
            .fold(0.0, f64::max);
        assert_relative_eq!(norm.operator_norm(&a), sampled, max_relative = 1e-8);
    }

    #[test]
    fn identity_is_perfectly_conditioned() {
        assert_relative_eq!(rcond(&DMatrix::identity(4, 4)), 1.0);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(rcond(&singular) < SINGULAR_RCOND);
    }
}
