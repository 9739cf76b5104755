//! Nonlinear operator problems `F(x) = 0` with a base point and a norm.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::linalg::{rcond, Norm, NormSpec, SINGULAR_RCOND};

/// Entrywise tolerance, relative to the largest Jacobian entry, for the
/// finite-difference Jacobian check at the base point.
pub const FD_JACOBIAN_TOL: f64 = 1e-5;

/// A smooth map `F: Rⁿ → Rⁿ` with its Jacobian.
pub trait NonlinearMap: Send + Sync {
    fn dim(&self) -> usize;
    fn residual(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

type VecFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type MatFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// [`NonlinearMap`] backed by closures.
pub struct FnMap {
    dim: usize,
    residual: Box<VecFn>,
    jacobian: Box<MatFn>,
}

impl FnMap {
    pub fn new<R, J>(dim: usize, residual: R, jacobian: J) -> Self
    where
        R: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            residual: Box::new(residual),
            jacobian: Box::new(jacobian),
        }
    }
}

impl NonlinearMap for FnMap {
    fn dim(&self) -> usize {
        self.dim
    }
    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.residual)(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.jacobian)(x)
    }
}

/// `F(x) = 0` posed on the open ball `B(x0, domain_radius)`.
#[derive(Clone)]
pub struct OperatorProblem {
    name: String,
    map: Arc<dyn NonlinearMap>,
    base_point: DVector<f64>,
    domain_radius: f64,
    norm: Norm,
}

impl fmt::Debug for OperatorProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("base_point", &self.base_point.as_slice())
            .field("domain_radius", &self.domain_radius)
            .field("norm", self.norm.spec())
            .finish()
    }
}

impl OperatorProblem {
    /// Builds and validates a problem. `domain_radius` may be infinite.
    ///
    /// Fails if `F'(x0)` is singular or disagrees with a central-difference
    /// Jacobian.
    pub fn new(
        name: impl Into<String>,
        map: Arc<dyn NonlinearMap>,
        base_point: DVector<f64>,
        domain_radius: f64,
        norm: &NormSpec,
    ) -> Result<Self> {
        let n = map.dim();
        if n == 0 || base_point.len() != n {
            return Err(Error::Problem(format!(
                "base point has dimension {} but the map has dimension {n}",
                base_point.len()
            )));
        }
        if !(domain_radius > 0.0) {
            return Err(Error::Problem(format!("domain radius must be positive, got {domain_radius}")));
        }
        let norm = Norm::new(norm, n)?;
        let problem = Self {
            name: name.into(),
            map,
            base_point,
            domain_radius,
            norm,
        };
        let fx = problem.residual(&problem.base_point);
        if fx.len() != n || !fx.iter().all(|v| v.is_finite()) {
            return Err(Error::Problem("F(x0) is not a finite vector of the right size".into()));
        }
        let jac = problem.jacobian(&problem.base_point);
        if jac.shape() != (n, n) {
            return Err(Error::Problem(format!("Jacobian has shape {:?}, expected ({n}, {n})", jac.shape())));
        }
        let rc = rcond(&jac);
        if !(rc >= SINGULAR_RCOND) {
            return Err(Error::SingularJacobian { step: 0, rcond: rc });
        }
        let gap = problem.fd_jacobian_gap(&problem.base_point);
        if !(gap <= FD_JACOBIAN_TOL) {
            return Err(Error::Problem(format!(
                "analytic Jacobian disagrees with finite differences at x0 (relative gap {gap:e})"
            )));
        }
        Ok(problem)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.base_point.len()
    }

    pub fn base_point(&self) -> &DVector<f64> {
        &self.base_point
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn norm(&self) -> &Norm {
        &self.norm
    }

    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        self.map.residual(x)
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.map.jacobian(x)
    }

    pub fn distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.norm.norm(&(x - y))
    }

    /// Largest entrywise gap between `F'(x)` and a central-difference
    /// Jacobian, divided by `max(1, max |F'(x)_ij|)`.
    pub fn fd_jacobian_gap(&self, x: &DVector<f64>) -> f64 {
        let jac = self.jacobian(x);
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[j] += h;
            minus[j] -= h;
            let col = (self.residual(&plus) - self.residual(&minus)) / (2.0 * h);
            for i in 0..n {
                worst = worst.max((col[i] - jac[(i, j)]).abs());
            }
        }
        worst / jac.amax().max(1.0)
    }

    /// LU factorization of `F'(x)` used as the fixed preconditioner.
    pub fn factor_at(&self, x: &DVector<f64>) -> Result<Preconditioner> {
        let jac = self.jacobian(x);
        if !jac.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        let rc = rcond(&jac);
        if !(rc >= SINGULAR_RCOND) {
            return Err(Error::SingularJacobian { step: 0, rcond: rc });
        }
        Ok(Preconditioner { lu: jac.lu() })
    }
}

/// Applies `A⁻¹` for a fixed nonsingular `A`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Preconditioner {
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(v).expect("factor checked for singularity")
    }

    pub fn apply_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu.solve(m).expect("factor checked for singularity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt2(jacobian_scale: f64) -> Arc<dyn NonlinearMap> {
        Arc::new(FnMap::new(
            1,
            |x| DVector::from_element(1, x[0] * x[0] - 2.0),
            move |x| DMatrix::from_element(1, 1, jacobian_scale * 2.0 * x[0]),
        ))
    }

    #[test]
    fn builds_valid_problem() {
        let p = OperatorProblem::new("sqrt2", sqrt2(1.0), DVector::from_element(1, 1.5), f64::INFINITY, &NormSpec::Euclidean)
            .unwrap();
        assert_eq!(p.dim(), 1);
        assert!(p.fd_jacobian_gap(p.base_point()) < 1e-8);
        let pre = p.factor_at(p.base_point()).unwrap();
        let v = pre.apply(&p.residual(p.base_point()));
        assert!((v[0] - 0.25 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_jacobian() {
        let err = OperatorProblem::new("bad", sqrt2(1.01), DVector::from_element(1, 1.5), 1.0, &NormSpec::Euclidean)
            .unwrap_err();
        assert!(err.to_string().contains("finite differences"), "{err}");
    }

    #[test]
    fn rejects_singular_base_point() {
        let err = OperatorProblem::new("flat", sqrt2(1.0), DVector::from_element(1, 0.0), 1.0, &NormSpec::Euclidean)
            .unwrap_err();
        assert!(matches!(err, Error::SingularJacobian { step: 0, .. }));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = OperatorProblem::new("dim", sqrt2(1.0), DVector::zeros(2), 1.0, &NormSpec::Euclidean).unwrap_err();
        assert!(matches!(err, Error::Problem(_)));
    }
}
