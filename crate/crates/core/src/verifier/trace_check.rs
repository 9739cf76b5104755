use nalgebra::DVector;

use super::{ProbeReport, DEFAULT_TOLERANCE};
use crate::dynamics::{majorant_sequence, n_theta_step, MajorantState};
use crate::error::{Error, Result};
use crate::linalg::{rcond, SINGULAR_RCOND};
use crate::majorant::{derive_certificate, shift_majorant, Certificate, MajorantFunction};
use crate::problem::OperatorProblem;
use crate::trace::IterationTrace;

/// Steps with a preconditioned residual below this are left out of the
/// error-ratio checks.
pub const RATIO_CUTOFF: f64 = 1e-12;

/// Absolute allowance on the Q-linear bound.
const QLINEAR_ALLOWANCE: f64 = 1e-12;

/// Reports produced by [`check_trace`].
#[derive(Debug, Clone)]
pub struct TraceCheck {
    pub reports: Vec<ProbeReport>,
    pub ratio_cutoff: f64,
}

impl TraceCheck {
    /// True when every gating report passed.
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed || !r.gating)
    }

    pub fn report(&self, name: &str) -> Option<&ProbeReport> {
        self.reports.iter().find(|r| r.name == name)
    }
}

/// Exact Newton from `x0` down to a preconditioned residual of `1e-14`,
/// followed by up to two polishing steps that do not increase the residual.
pub fn reference_solution(p: &OperatorProblem) -> Result<DVector<f64>> {
    let base = p.jacobian(p.base_point()).lu();
    let precond = |x: &DVector<f64>| {
        base.solve(&p.residual(x))
            .map(|v| p.norm().norm(&v))
            .unwrap_or(f64::NAN)
    };
    let mut x = p.base_point().clone();
    let mut r = precond(&x);
    let mut polish = 0;
    for step in 0..200 {
        if r <= 1e-14 {
            polish += 1;
            if polish > 2 {
                break;
            }
        }
        let jac = p.jacobian(&x);
        let rc = rcond(&jac);
        if !(rc >= SINGULAR_RCOND) {
            return Err(Error::SingularJacobian { step, rcond: rc });
        }
        let Some(dx) = jac.lu().solve(&(-p.residual(&x))) else {
            return Err(Error::SingularJacobian { step, rcond: rc });
        };
        let next = &x + dx;
        let r_next = precond(&next);
        if !r_next.is_finite() {
            return Err(Error::NonFinite { step });
        }
        if polish > 0 && r_next > r {
            break;
        }
        x = next;
        r = r_next;
    }
    if !(r <= 1e-14) {
        return Err(Error::Problem(format!(
            "reference Newton run did not reach 1e-14 (residual {r:e})"
        )));
    }
    Ok(x)
}

/// Checks a trace against the bounds of the convergence theory.
///
/// `cert` must be the certificate of `m` at the trace's `ρ`, and `x_star` a
/// high-accuracy zero (see [`reference_solution`]). Reports:
///
/// * `residual_condition`: each step meets its own `θ_k`
/// * `shadow_consistency`: stored `(t_k, ε_k)` match a fresh run of `n_θ`
/// * `k_membership`: `‖z_k - z0‖ ≤ t_k` and `r_k ≤ g(t_k) + ε_k`
/// * `residual_envelope`: `r_k ≤ ∏_{j<k} (1+θ_j²)/2 · (f(0) + 2ρ)`
/// * `containment`: `‖z_k - z0‖ < λ_ρ`
/// * `step_bound`: `‖z_{k+1} - z_k‖ ≤ t_{k+1} - t_k`
/// * `limit_distance`: `‖x* - z_k‖ ≤ t̃ - t_k`
/// * `limit_location`: `‖x* - x0‖ ≤ t*`
/// * `contraction_shifted`: composite contraction written with `g` at `λ`
/// * `contraction_literal`: the same written with `f` at `λ_ρ`, gating only
///   for `ρ = 0` where both agree
/// * `qlinear`: `e_{k+1} ≤ [(1+θ_k)/2 + 2θ_k/κ] e_k` for `θ_k` below the
///   threshold
///
/// Here `g` is the shifted majorant and `r_k = ‖F'(z0)⁻¹F(z_k)‖`.
pub fn check_trace(
    p: &OperatorProblem,
    trace: &IterationTrace,
    m: &MajorantFunction,
    cert: &Certificate,
    x_star: &DVector<f64>,
) -> Result<TraceCheck> {
    let rho = trace.rho;
    if (cert.rho - rho).abs() > 1e-15 * rho.max(1.0) {
        return Err(Error::Provenance(format!(
            "trace was run with rho = {rho} but the certificate has rho = {}",
            cert.rho
        )));
    }
    let n = p.dim();
    if trace.records.is_empty() || trace.dim() != n || x_star.len() != n {
        return Err(Error::Provenance(format!(
            "dimension mismatch: problem {n}, trace {}, reference {}",
            trace.dim(),
            x_star.len()
        )));
    }
    let z0 = trace.start_point().clone();
    let x0 = p.base_point();
    let offset = p.distance(&z0, x0);
    if offset > rho * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::Provenance(format!(
            "trace starts at distance {offset} from x0, beyond rho = {rho}"
        )));
    }
    let last = trace.records.len() - 1;
    let mut thetas = Vec::with_capacity(last);
    for rec in &trace.records[..last] {
        match rec.theta {
            Some(th) if th >= 0.0 => thetas.push(th),
            _ => {
                return Err(Error::Provenance(format!("step {} has no forcing term", rec.k)));
            }
        }
    }

    let g = shift_majorant(m, rho)?;
    let gc = derive_certificate(&g, 0.0)?;
    let norm = p.norm();
    let base = p.jacobian(&z0).lu();
    let pre_norm = |v: DVector<f64>| {
        base.solve(&v)
            .map(|w| norm.norm(&w))
            .unwrap_or(f64::NAN)
    };

    // scalar shadow, recomputed
    let mut states = vec![MajorantState::ORIGIN];
    for (k, &th) in thetas.iter().enumerate() {
        if th > gc.theta_max * (1.0 + 1e-9) {
            return Err(Error::Tolerance {
                theta: th,
                theta_max: gc.theta_max,
            });
        }
        let s = states[k];
        let next = if s.slack(&g) > 0.0 {
            n_theta_step(&g, &gc, th.min(gc.theta_max), s)?
        } else {
            s
        };
        states.push(next);
    }
    let tail_theta = thetas.last().copied().unwrap_or(0.0).min(gc.theta_max);
    let t_tilde = majorant_sequence(&g, &gc, tail_theta, states[last], 2000)?.limit;

    let zs: Vec<&DVector<f64>> = trace.records.iter().map(|r| &r.iterate).collect();
    let residuals: Vec<f64> = zs.iter().map(|z| pre_norm(p.residual(z))).collect();
    let dists: Vec<f64> = zs.iter().map(|z| p.distance(z, &z0)).collect();
    let errors: Vec<f64> = zs.iter().map(|z| p.distance(x_star, z)).collect();

    let tol = DEFAULT_TOLERANCE;
    let mut condition = ProbeReport::new("residual_condition", tol);
    let mut shadow = ProbeReport::new("shadow_consistency", tol);
    let mut member = ProbeReport::new("k_membership", tol);
    let mut envelope = ProbeReport::new("residual_envelope", tol);
    let mut contain = ProbeReport::new("containment", tol);
    let mut step_bound = ProbeReport::new("step_bound", tol);
    let mut limit_distance = ProbeReport::new("limit_distance", tol);
    let mut location = ProbeReport::new("limit_location", tol);

    let mut env = m.value(0.0) + 2.0 * rho;
    for k in 0..=last {
        let s = states[k];
        let slack_t = s.t - dists[k];
        let slack_r = g.value(s.t) + s.eps - residuals[k];
        if slack_t <= slack_r {
            member.record(k, dists[k], s.t);
        } else {
            member.record(k, residuals[k], g.value(s.t) + s.eps);
        }
        envelope.record(k, residuals[k], env);
        contain.record(k, dists[k], gc.lambda);
        limit_distance.record(k, errors[k], t_tilde - s.t);
        if let Some(stored) = trace.records[k].state {
            let gap = (stored.t - s.t).abs().max((stored.eps - s.eps).abs());
            shadow.record(k, gap, 1e-12 * s.t.abs().max(1.0));
        }
        if k < last {
            let th = thetas[k];
            let step = zs[k + 1] - zs[k];
            let lin = p.residual(zs[k]) + p.jacobian(zs[k]) * &step;
            condition.record(k, pre_norm(lin), th * residuals[k]);
            step_bound.record(k, norm.norm(&step), states[k + 1].t - s.t);
            env *= (1.0 + th * th) / 2.0;
        }
    }
    location.record(0, p.distance(x_star, x0), cert.t_star);

    let mut reports = vec![
        condition,
        shadow,
        member,
        envelope,
        contain,
        step_bound,
        limit_distance,
        location,
    ];

    let ratio_steps: Vec<usize> = (0..last).filter(|&k| residuals[k] >= RATIO_CUTOFF).collect();
    let cutoff_note = format!("steps with r_k < {RATIO_CUTOFF:e} excluded");

    let mut shifted = ProbeReport::new("contraction_shifted", tol).with_note(cutoff_note.clone());
    let mut literal = ProbeReport::new("contraction_literal", tol).with_note(cutoff_note.clone());
    if rho > 0.0 {
        literal = literal.informational();
    }
    if gc.h4_holds() {
        let lam = gc.lambda;
        let a_g = g.left_second(lam) / g.derivative(lam).abs();
        let b_g = (2.0 + g.derivative(lam)) / g.derivative(lam).abs();
        let lam_r = cert.lambda;
        let a_f = m.left_second(lam_r) / m.derivative(lam_r).abs();
        let b_f = (m.derivative(lam_r + rho) + 2.0 * m.derivative(rho).abs()) / m.derivative(lam_r + rho).abs();
        for &k in &ratio_steps {
            let th = thetas[k];
            let e = errors[k];
            shifted.record(k, errors[k + 1], ((1.0 + th) / 2.0 * a_g * e + th * b_g) * e);
            literal.record(k, errors[k + 1], ((1.0 + th) / 2.0 * a_f * e + th * b_f) * e);
        }
    } else {
        shifted = shifted.with_note("h4 fails: lambda is not below R - rho, check skipped");
        literal = literal.with_note("h4 fails: lambda is not below R - rho, check skipped");
    }
    reports.push(shifted);
    reports.push(literal);

    let mut qlinear = ProbeReport::new("qlinear", tol).with_note(cutoff_note);
    for &k in &ratio_steps {
        let th = thetas[k];
        if th < cert.qlinear_threshold {
            qlinear.record(k, errors[k + 1], cert.qlinear_factor(th) * errors[k] + QLINEAR_ALLOWANCE);
        }
    }
    reports.push(qlinear);

    Ok(TraceCheck {
        reports,
        ratio_cutoff: RATIO_CUTOFF,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormSpec;
    use crate::problem::FnMap;
    use crate::solver::{inexact_newton_solve, SolveConfig, StepMode};
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

    fn run(theta: f64) -> (OperatorProblem, MajorantFunction, IterationTrace) {
        let (p, m) = sqrt2();
        let cfg = SolveConfig {
            theta,
            step_mode: StepMode::worst_case(),
            ..SolveConfig::default()
        };
        let trace = inexact_newton_solve(&p, &m, &cfg).unwrap();
        (p, m, trace)
    }

    #[test]
    fn reference_is_sqrt2() {
        let (p, _) = sqrt2();
        let x = reference_solution(&p).unwrap();
        assert!((x[0] - std::f64::consts::SQRT_2).abs() <= 4e-16);
    }

    #[test]
    fn exact_and_worst_case_traces_pass() {
        for theta in [0.0, 0.05, 0.25, 0.5] {
            let (p, m, trace) = run(theta);
            let cert = derive_certificate(&m, 0.0).unwrap();
            let x = reference_solution(&p).unwrap();
            let check = check_trace(&p, &trace, &m, &cert, &x).unwrap();
            for r in &check.reports {
                assert!(r.passed, "theta = {theta}: {r}");
            }
            assert_eq!(check.report("qlinear").unwrap().samples > 0, theta < 1.0 / 7.0);
        }
    }

    #[test]
    fn doubled_step_fails_membership_at_next_iterate() {
        let (p, m, trace) = run(0.0);
        let cert = derive_certificate(&m, 0.0).unwrap();
        let x = reference_solution(&p).unwrap();
        let bad = trace.with_scaled_step(1, 2.0);
        let check = check_trace(&p, &bad, &m, &cert, &x).unwrap();
        assert!(!check.passed());
        assert_eq!(check.report("k_membership").unwrap().violations(), vec![2]);
    }

    #[test]
    fn certificate_mismatch_is_rejected() {
        let (p, m, trace) = run(0.0);
        let cert = derive_certificate(&m, 0.1).unwrap();
        let x = reference_solution(&p).unwrap();
        assert!(matches!(check_trace(&p, &trace, &m, &cert, &x), Err(Error::Provenance(_))));
    }
}
