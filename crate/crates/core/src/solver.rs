//! Inexact Newton iteration with a relative residual condition measured
//! through the fixed preconditioner `A0 = F'(z0)`.
//!
//! Each step `S_k` satisfies
//!
//! ```text
//! ‖A0⁻¹[F(z_k) + F'(z_k) S_k]‖ ≤ θ_k ‖A0⁻¹ F(z_k)‖
//! ```
//!
//! and the run carries the scalar shadow `(t_k, ε_k)` of the shifted
//! majorant alongside the vector iterates.

use nalgebra::DVector;

use crate::dynamics::{n_theta_step, MajorantState};
use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::linalg::{rcond, SINGULAR_RCOND};
use crate::majorant::{derive_certificate, shift_majorant, Certificate, MajorantFunction};
use crate::problem::{OperatorProblem, Preconditioner};
pub use crate::trace::{IterationRecord, IterationTrace, ThetaSchedule};

/// Relative slack on envelope and containment checks.
const ENFORCE_REL: f64 = 1e-9;
/// Absolute slack on envelope and containment checks.
const ENFORCE_ABS: f64 = 1e-12;

/// Relative residual the perturbed step is built to achieve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationTarget {
    /// The step's own `θ_k`.
    Tolerance,
    /// A fixed value, which must not exceed `θ_k`.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepMode {
    /// Restarted GMRES stopped at the first iterate meeting `θ_k`.
    IterativeInner,
    /// Exact Newton step plus `α d`, with `α` chosen so that the relative
    /// residual equals the target. Defaults to the unit all-ones direction.
    ExactPlusPerturbation {
        target: PerturbationTarget,
        direction: Option<DVector<f64>>,
    },
}

impl StepMode {
    /// Perturbed steps that use up the whole tolerance.
    pub fn worst_case() -> Self {
        StepMode::ExactPlusPerturbation {
            target: PerturbationTarget::Tolerance,
            direction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub theta: f64,
    pub rho: f64,
    /// Defaults to the problem's base point.
    pub start_point: Option<DVector<f64>>,
    pub max_iterations: usize,
    /// Stop once `‖A0⁻¹F(z_k)‖` is at or below this.
    pub stop_residual: f64,
    pub schedule: ThetaSchedule,
    pub step_mode: StepMode,
    /// Reject `θ > Θ_ρ` up front and check the residual envelope and the
    /// containment `‖z_k - z0‖ < λ_ρ` at every iterate.
    pub enforce: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            theta: 0.0,
            rho: 0.0,
            start_point: None,
            max_iterations: 100,
            stop_residual: 1e-13,
            schedule: ThetaSchedule::Fixed,
            step_mode: StepMode::IterativeInner,
            enforce: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub step: DVector<f64>,
    /// `‖A0⁻¹ F(z)‖`.
    pub residual: f64,
    pub achieved_rel_residual: f64,
    pub inner_iterations: usize,
}

/// Computes one step from `z` meeting the residual condition with `θ`.
///
/// `θ = 0` (or a zero residual) takes a direct solve. `step_index` only
/// labels errors.
pub fn residual_controlled_step(
    problem: &OperatorProblem,
    base: &Preconditioner,
    z: &DVector<f64>,
    theta: f64,
    mode: &StepMode,
    step_index: usize,
) -> Result<StepResult> {
    let n = problem.dim();
    let fz = problem.residual(z);
    let jac = problem.jacobian(z);
    if !fz.iter().chain(jac.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite { step: step_index });
    }
    let rc = rcond(&jac);
    if !(rc >= SINGULAR_RCOND) {
        return Err(Error::SingularJacobian { step: step_index, rcond: rc });
    }
    let norm = problem.norm();
    let pre_f = base.apply(&fz);
    let residual = norm.norm(&pre_f);
    if residual == 0.0 {
        return Ok(StepResult {
            step: DVector::zeros(n),
            residual,
            achieved_rel_residual: 0.0,
            inner_iterations: 0,
        });
    }
    let achieved = |s: &DVector<f64>| norm.norm(&base.apply(&(&fz + &jac * s))) / residual;
    let newton = || {
        jac.clone()
            .lu()
            .solve(&(-&fz))
            .ok_or(Error::SingularJacobian { step: step_index, rcond: rc })
    };

    if theta == 0.0 {
        let step = newton()?;
        return Ok(StepResult {
            achieved_rel_residual: achieved(&step),
            step,
            residual,
            inner_iterations: 0,
        });
    }

    match mode {
        StepMode::IterativeInner => {
            // GMRES in Euclidean coordinates of the norm: B = Cᵀ A0⁻¹ J C⁻ᵀ
            let b = norm.conjugate(&base.apply_matrix(&jac));
            let rhs = -norm.to_euclidean(&pre_f);
            let restart = n.min(30);
            let out = gmres(|v| &b * v, &rhs, theta, restart, 10 * n);
            if !out.converged {
                return Err(Error::InnerStagnation {
                    iterations: out.iterations,
                    best: out.relative_residual,
                    target: theta,
                });
            }
            let step = norm.from_euclidean(&out.solution);
            Ok(StepResult {
                achieved_rel_residual: achieved(&step),
                step,
                residual,
                inner_iterations: out.iterations,
            })
        }
        StepMode::ExactPlusPerturbation { target, direction } => {
            let target = match *target {
                PerturbationTarget::Tolerance => theta,
                PerturbationTarget::Fixed(v) => {
                    if !(v >= 0.0 && v <= theta) {
                        return Err(Error::Tolerance { theta: v, theta_max: theta });
                    }
                    v
                }
            };
            let d = match direction {
                Some(d) if d.len() == n && norm.norm(d) > 0.0 => d / norm.norm(d),
                Some(_) => return Err(Error::Problem("perturbation direction has wrong size or is zero".into())),
                None => norm.unit_ones(n),
            };
            let w = norm.norm(&base.apply(&(&jac * &d)));
            let alpha = target * residual / w;
            let step = newton()? + d * alpha;
            Ok(StepResult {
                achieved_rel_residual: achieved(&step),
                step,
                residual,
                inner_iterations: 0,
            })
        }
    }
}

/// Runs the iteration from `cfg.start_point` (or `x0`), which must lie within
/// `ρ` of `x0` when enforcement is on.
///
/// Hitting `max_iterations` is not an error; the trace is returned with
/// `converged = false`.
pub fn inexact_newton_solve(
    problem: &OperatorProblem,
    m: &MajorantFunction,
    cfg: &SolveConfig,
) -> Result<IterationTrace> {
    let rho = cfg.rho;
    if !(rho >= 0.0) {
        return Err(Error::Problem(format!("rho must be non-negative, got {rho}")));
    }
    let cert = derive_certificate(m, rho)?;
    let z0 = cfg.start_point.clone().unwrap_or_else(|| problem.base_point().clone());
    if z0.len() != problem.dim() {
        return Err(Error::Problem(format!(
            "start point has dimension {}, expected {}",
            z0.len(),
            problem.dim()
        )));
    }
    let offset = problem.distance(&z0, problem.base_point());
    if cfg.enforce && offset > rho * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::Problem(format!(
            "start point lies at distance {offset} from x0, beyond rho = {rho}"
        )));
    }
    match cfg.schedule {
        ThetaSchedule::Fixed => {
            if !(cfg.theta >= 0.0) || (cfg.enforce && cfg.theta > cert.theta_max * (1.0 + 1e-12)) {
                return Err(Error::Tolerance {
                    theta: cfg.theta,
                    theta_max: cert.theta_max,
                });
            }
        }
        ThetaSchedule::Adaptive { factor } => {
            if !(factor > 0.0) {
                return Err(Error::Problem(format!("adaptive factor must be positive, got {factor}")));
            }
        }
    }

    let g = shift_majorant(m, rho)?;
    let shadow_cert = derive_certificate(&g, 0.0)?;
    let base = problem.factor_at(&z0)?;
    let norm = problem.norm();

    let mut records = Vec::new();
    let mut z = z0.clone();
    let mut state = Some(MajorantState::ORIGIN);
    let mut envelope = m.value(0.0) + 2.0 * rho;
    let mut converged = false;
    let nominal = match cfg.schedule {
        ThetaSchedule::Fixed => cfg.theta,
        ThetaSchedule::Adaptive { .. } => cert.theta_max,
    };

    for k in 0..=cfg.max_iterations {
        let fz = problem.residual(&z);
        if !fz.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
        let residual = norm.norm(&base.apply(&fz));
        let dist = problem.distance(&z, &z0);
        if cfg.enforce {
            check_bounds(k, residual, envelope, dist, &cert)?;
        }
        let mut record = IterationRecord {
            k,
            iterate: z.clone(),
            dist_to_start: dist,
            residual,
            step_norm: None,
            achieved_rel_residual: None,
            theta: None,
            inner_iterations: None,
            state,
        };
        if residual <= cfg.stop_residual {
            converged = true;
            records.push(record);
            break;
        }
        if k == cfg.max_iterations {
            records.push(record);
            break;
        }
        let theta_k = match cfg.schedule {
            ThetaSchedule::Fixed => cfg.theta,
            ThetaSchedule::Adaptive { factor } => cert.theta_max.min(factor * residual),
        };
        let step = residual_controlled_step(problem, &base, &z, theta_k, &cfg.step_mode, k)?;
        record.step_norm = Some(norm.norm(&step.step));
        record.achieved_rel_residual = Some(step.achieved_rel_residual);
        record.theta = Some(theta_k);
        record.inner_iterations = Some(step.inner_iterations);
        records.push(record);

        z += &step.step;
        envelope *= (1.0 + theta_k * theta_k) / 2.0;
        state = match state {
            Some(s) if theta_k <= shadow_cert.theta_max * (1.0 + 1e-9) => {
                if s.slack(&g) > 0.0 {
                    let theta_s = theta_k.min(shadow_cert.theta_max);
                    match n_theta_step(&g, &shadow_cert, theta_s, s) {
                        Ok(next) => Some(next),
                        Err(e) if cfg.enforce => return Err(e),
                        Err(_) => None,
                    }
                } else {
                    Some(s)
                }
            }
            _ => None,
        };
    }

    Ok(IterationTrace {
        problem: problem.name().to_string(),
        rho,
        theta: nominal,
        schedule: cfg.schedule,
        converged,
        records,
    })
}

/// [`inexact_newton_solve`] with `θ_k = min(Θ_ρ, factor · r_k)`.
pub fn adaptive_theta_solve(
    problem: &OperatorProblem,
    m: &MajorantFunction,
    factor: f64,
    cfg: &SolveConfig,
) -> Result<IterationTrace> {
    let cfg = SolveConfig {
        schedule: ThetaSchedule::Adaptive { factor },
        ..cfg.clone()
    };
    inexact_newton_solve(problem, m, &cfg)
}

fn check_bounds(k: usize, residual: f64, envelope: f64, dist: f64, cert: &Certificate) -> Result<()> {
    let limit = envelope * (1.0 + ENFORCE_REL) + ENFORCE_ABS;
    if !(residual <= limit) {
        return Err(Error::Envelope {
            step: k,
            bound: "residual envelope",
            measured: residual,
            limit: envelope,
        });
    }
    let radius = cert.lambda * (1.0 + ENFORCE_REL) + ENFORCE_ABS;
    if !(dist < radius) {
        return Err(Error::Envelope {
            step: k,
            bound: "containment in B(z0, lambda)",
            measured: dist,
            limit: cert.lambda,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormSpec;
    use crate::problem::FnMap;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn sqrt2() -> (OperatorProblem, MajorantFunction) {
        let map = FnMap::new(
            1,
            |x| DVector::from_element(1, x[0] * x[0] - 2.0),
            |x| DMatrix::from_element(1, 1, 2.0 * x[0]),
        );
        let p = OperatorProblem::new("sqrt2", Arc::new(map), DVector::from_element(1, 1.5), f64::INFINITY, &NormSpec::Euclidean)
            .unwrap();
        (p, MajorantFunction::quadratic(2.0 / 3.0, 1.0 / 12.0).unwrap())
    }

    fn rotated() -> OperatorProblem {
        // F(x, y) = (x² + y² - 1, x - y)
        let map = FnMap::new(
            2,
            |v| DVector::from_vec(vec![v[0] * v[0] + v[1] * v[1] - 1.0, v[0] - v[1]]),
            |v| DMatrix::from_row_slice(2, 2, &[2.0 * v[0], 2.0 * v[1], 1.0, -1.0]),
        );
        OperatorProblem::new("circle", Arc::new(map), DVector::from_vec(vec![0.75, 0.7]), f64::INFINITY, &NormSpec::Euclidean)
            .unwrap()
    }

    #[test]
    fn exact_newton_on_sqrt2() {
        let (p, m) = sqrt2();
        let trace = inexact_newton_solve(&p, &m, &SolveConfig::default()).unwrap();
        assert!(trace.converged);
        assert_relative_eq!(trace.final_iterate()[0], std::f64::consts::SQRT_2, max_relative = 1e-15);
        // first Newton step 1.5 -> 1.41666...
        assert_relative_eq!(trace.records[1].iterate[0], 17.0 / 12.0, max_relative = 1e-15);
    }

    #[test]
    fn gmres_step_meets_tolerance_without_oversolving() {
        let p = rotated();
        let base = p.factor_at(p.base_point()).unwrap();
        let step = residual_controlled_step(&p, &base, p.base_point(), 0.3, &StepMode::IterativeInner, 0).unwrap();
        assert!(step.achieved_rel_residual <= 0.3 + 1e-14);
        assert!(step.inner_iterations >= 1);
    }

    #[test]
    fn worst_case_step_hits_target() {
        let p = rotated();
        let base = p.factor_at(p.base_point()).unwrap();
        let z = DVector::from_vec(vec![0.72, 0.69]);
        for theta in [0.01, 0.1, 0.2] {
            let step = residual_controlled_step(&p, &base, &z, theta, &StepMode::worst_case(), 1).unwrap();
            assert_relative_eq!(step.achieved_rel_residual, theta, max_relative = 1e-12);
        }
        let fixed = StepMode::ExactPlusPerturbation {
            target: PerturbationTarget::Fixed(0.05),
            direction: Some(DVector::from_vec(vec![1.0, -3.0])),
        };
        let step = residual_controlled_step(&p, &base, &z, 0.1, &fixed, 1).unwrap();
        assert_relative_eq!(step.achieved_rel_residual, 0.05, max_relative = 1e-12);
        let too_big = StepMode::ExactPlusPerturbation {
            target: PerturbationTarget::Fixed(0.2),
            direction: None,
        };
        assert!(matches!(
            residual_controlled_step(&p, &base, &z, 0.1, &too_big, 1),
            Err(Error::Tolerance { .. })
        ));
    }

    #[test]
    fn rejects_tolerance_above_theta_max() {
        let (p, m) = sqrt2();
        let cfg = SolveConfig {
            theta: 0.6,
            ..SolveConfig::default()
        };
        assert!(matches!(inexact_newton_solve(&p, &m, &cfg), Err(Error::Tolerance { .. })));
        let unenforced = SolveConfig { enforce: false, ..cfg };
        let trace = inexact_newton_solve(&p, &m, &unenforced).unwrap();
        assert!(trace.records.iter().all(|r| r.state.is_none() || r.k == 0));
    }

    #[test]
    fn rejects_large_rho_and_far_start() {
        let (p, m) = sqrt2();
        let cfg = SolveConfig {
            rho: 0.34,
            ..SolveConfig::default()
        };
        assert!(matches!(inexact_newton_solve(&p, &m, &cfg), Err(Error::PerturbationTooLarge { .. })));
        let far = SolveConfig {
            rho: 0.1,
            start_point: Some(DVector::from_element(1, 1.7)),
            ..SolveConfig::default()
        };
        assert!(matches!(inexact_newton_solve(&p, &m, &far), Err(Error::Problem(_))));
    }

    #[test]
    fn shadow_states_dominate_iterates() {
        let (p, m) = sqrt2();
        let cfg = SolveConfig {
            theta: 0.3,
            step_mode: StepMode::worst_case(),
            ..SolveConfig::default()
        };
        let trace = inexact_newton_solve(&p, &m, &cfg).unwrap();
        assert!(trace.converged);
        for r in &trace.records {
            let s = r.state.unwrap();
            assert!(r.dist_to_start <= s.t + 1e-12, "{r:?}");
            assert!(r.residual <= m.value(s.t) + s.eps + 1e-12, "{r:?}");
        }
    }

    #[test]
    fn adaptive_run_converges_fast() {
        let (p, m) = sqrt2();
        let fixed = inexact_newton_solve(
            &p,
            &m,
            &SolveConfig {
                theta: 0.4,
                step_mode: StepMode::worst_case(),
                ..SolveConfig::default()
            },
        )
        .unwrap();
        let adaptive = adaptive_theta_solve(
            &p,
            &m,
            1.0,
            &SolveConfig {
                step_mode: StepMode::worst_case(),
                ..SolveConfig::default()
            },
        )
        .unwrap();
        assert!(adaptive.converged);
        assert!(adaptive.steps() < fixed.steps());
        for r in &adaptive.records[..adaptive.records.len() - 1] {
            assert!(r.theta.unwrap() <= 0.5 + 1e-15);
            assert!(r.theta.unwrap() <= r.residual + 1e-18);
        }
    }

    #[test]
    fn perturbed_start_stays_in_ball() {
        let (p, m) = sqrt2();
        let rho = 0.1;
        let cert = derive_certificate(&m, rho).unwrap();
        let cfg = SolveConfig {
            theta: cert.theta_max,
            rho,
            start_point: Some(DVector::from_element(1, 1.5 - rho)),
            step_mode: StepMode::worst_case(),
            ..SolveConfig::default()
        };
        let trace = inexact_newton_solve(&p, &m, &cfg).unwrap();
        assert!(trace.converged);
        assert!(trace.records.iter().all(|r| r.dist_to_start < cert.lambda));
    }

    #[test]
    fn iteration_cap_is_not_an_error() {
        let (p, m) = sqrt2();
        let cfg = SolveConfig {
            theta: 0.4,
            max_iterations: 2,
            ..SolveConfig::default()
        };
        let trace = inexact_newton_solve(&p, &m, &cfg).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.steps(), 2);
    }
}
