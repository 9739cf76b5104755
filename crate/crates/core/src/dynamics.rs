//! Scalar shadow of the inexact iteration.
//!
//! The pair `(t, ε)` evolves under
//!
//! ```text
//! n_θ(t, ε) = ( t - (1+θ)(f(t)+ε)/f'(t),  ε + 2θ(f(t)+ε) )
//! ```
//!
//! and stays in `Ω = {0 ≤ t < λ, 0 ≤ ε ≤ κt, f(t)+ε > 0}` whenever
//! `θ ≤ Θ`. Every vector iterate `z_k` of the solver is bounded by the
//! matching state: `‖z_k - z0‖ ≤ t_k` and the preconditioned residual is at
//! most `f(t_k) + ε_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorant::{Certificate, MajorantFunction};

/// Sequences stop once `f(t) + ε` drops below this value.
pub const EARLY_STOP: f64 = 1e-15;

/// Relative slack allowed when comparing a tolerance against `Θ`.
const THETA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MajorantState {
    pub t: f64,
    pub eps: f64,
}

impl MajorantState {
    pub const ORIGIN: MajorantState = MajorantState { t: 0.0, eps: 0.0 };

    pub fn new(t: f64, eps: f64) -> Self {
        Self { t, eps }
    }

    /// `f(t) + ε`, the residual bound carried by this state.
    pub fn slack(&self, m: &MajorantFunction) -> f64 {
        m.value(self.t) + self.eps
    }
}

/// One application of `n_θ`.
pub fn n_theta_step(
    m: &MajorantFunction,
    cert: &Certificate,
    theta: f64,
    s: MajorantState,
) -> Result<MajorantState> {
    if !(theta >= 0.0 && theta <= cert.theta_max * (1.0 + THETA_SLACK)) {
        return Err(Error::Tolerance {
            theta,
            theta_max: cert.theta_max,
        });
    }
    let slope = m.derivative(s.t);
    if !(slope < 0.0) {
        return Err(Error::NonNegativeSlope { t: s.t, slope });
    }
    let level = m.value(s.t) + s.eps;
    Ok(MajorantState {
        t: s.t - (1.0 + theta) * level / slope,
        eps: s.eps + 2.0 * theta * level,
    })
}

/// Result of an `Ω` membership test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub inside: bool,
    /// First violated condition, when outside.
    pub reason: Option<&'static str>,
}

impl Membership {
    fn violated(reason: &'static str) -> Self {
        Self {
            inside: false,
            reason: Some(reason),
        }
    }
}

/// Tests `0 ≤ t < λ`, `0 ≤ ε ≤ κt` and `f(t) + ε > 0`, in that order.
pub fn omega_contains(m: &MajorantFunction, cert: &Certificate, s: MajorantState) -> Membership {
    if !(s.t >= 0.0) {
        return Membership::violated("t >= 0 violated");
    }
    if !(s.t < cert.lambda) {
        return Membership::violated("t < λ violated");
    }
    if !(s.eps >= 0.0) {
        return Membership::violated("ε >= 0 violated");
    }
    if !(s.eps <= cert.kappa * s.t) {
        return Membership::violated("ε ≤ κt violated");
    }
    if !(m.value(s.t) + s.eps > 0.0) {
        return Membership::violated("f(t) + ε > 0 violated");
    }
    Membership {
        inside: true,
        reason: None,
    }
}

/// A materialized run of `n_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantSequence {
    pub states: Vec<MajorantState>,
    /// Last `t` reached; a lower estimate of the limit `t̃ ≤ λ`.
    pub limit: f64,
    /// True when the run stopped because `f(t) + ε < EARLY_STOP`.
    pub stopped_early: bool,
    pub early_stop_threshold: f64,
}

/// Iterates `n_θ` from `s0` at most `k_max` times.
pub fn majorant_sequence(
    m: &MajorantFunction,
    cert: &Certificate,
    theta: f64,
    s0: MajorantState,
    k_max: usize,
) -> Result<MajorantSequence> {
    let mut states = Vec::with_capacity(k_max.min(10_000) + 1);
    states.push(s0);
    let mut current = s0;
    let mut stopped_early = false;
    for _ in 0..k_max {
        if current.slack(m) < EARLY_STOP {
            stopped_early = true;
            break;
        }
        current = n_theta_step(m, cert, theta, current)?;
        states.push(current);
    }
    if !stopped_early && current.slack(m) < EARLY_STOP {
        stopped_early = true;
    }
    Ok(MajorantSequence {
        limit: current.t,
        states,
        stopped_early,
        early_stop_threshold: EARLY_STOP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::derive_certificate;
    use approx::assert_relative_eq;

    fn quad() -> (MajorantFunction, Certificate) {
        let m = MajorantFunction::quadratic(1.0, 0.25).unwrap();
        let c = derive_certificate(&m, 0.0).unwrap();
        (m, c)
    }

    #[test]
    fn exact_step_from_origin() {
        let (m, c) = quad();
        let s = n_theta_step(&m, &c, 0.0, MajorantState::ORIGIN).unwrap();
        assert_eq!(s, MajorantState::new(0.25, 0.0));
    }

    #[test]
    fn inexact_step_from_origin() {
        let (m, c) = quad();
        let s = n_theta_step(&m, &c, 0.1, MajorantState::ORIGIN).unwrap();
        assert_relative_eq!(s.t, 0.275, max_relative = 1e-15);
        assert_relative_eq!(s.eps, 0.05, max_relative = 1e-15);
    }

    #[test]
    fn second_exact_step() {
        let (m, c) = quad();
        let s = n_theta_step(&m, &c, 0.0, MajorantState::new(0.25, 0.0)).unwrap();
        // 0.25 + 0.03125/0.75
        assert_relative_eq!(s.t, 7.0 / 24.0, max_relative = 1e-15);
        assert_eq!(s.eps, 0.0);
    }

    #[test]
    fn step_errors() {
        let (m, c) = quad();
        assert!(matches!(
            n_theta_step(&m, &c, 0.2, MajorantState::ORIGIN),
            Err(Error::Tolerance { .. })
        ));
        let at_pole = MajorantState::new(1.0, 0.0);
        assert!(matches!(
            n_theta_step(&m, &c, 0.0, at_pole),
            Err(Error::NonNegativeSlope { .. })
        ));
    }

    #[test]
    fn membership_reasons() {
        let (m, c) = quad();
        let inside = omega_contains(&m, &c, MajorantState::new(0.275, 0.05));
        assert!(inside.inside && inside.reason.is_none());
        let at_lambda = omega_contains(&m, &c, MajorantState::new(c.lambda, 0.0));
        assert_eq!(at_lambda.reason, Some("t < λ violated"));
        let too_much_slack = omega_contains(&m, &c, MajorantState::new(0.1, 0.5));
        assert_eq!(too_much_slack.reason, Some("ε ≤ κt violated"));
        // beyond t*, f < 0 with no slack
        let below = omega_contains(&m, &c, MajorantState::new(0.5, 0.0));
        assert_eq!(below.reason, Some("f(t) + ε > 0 violated"));
        assert!(omega_contains(&m, &c, MajorantState::ORIGIN).inside);
    }

    #[test]
    fn exact_sequence_reaches_t_star() {
        let (m, c) = quad();
        let seq = majorant_sequence(&m, &c, 0.0, MajorantState::ORIGIN, 50).unwrap();
        assert_relative_eq!(seq.limit, 0.292_893_22, max_relative = 1e-8);
        assert!(seq.stopped_early);
        assert!(seq.states.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn fixed_point_is_constant() {
        let (m, c) = quad();
        let seed = MajorantState::new(c.t_star, 0.0);
        let seq = majorant_sequence(&m, &c, 0.0, seed, 10).unwrap();
        assert!(seq.states.iter().all(|s| (s.t - c.t_star).abs() < 1e-15));
    }

    #[test]
    fn inexact_sequence_decays_geometrically() {
        let (m, c) = quad();
        let theta = 0.1;
        let seq = majorant_sequence(&m, &c, theta, MajorantState::ORIGIN, 60).unwrap();
        let rate: f64 = (1.0 + theta * theta) / 2.0;
        for (k, s) in seq.states.iter().enumerate() {
            if s.slack(&m) >= EARLY_STOP {
                assert!(omega_contains(&m, &c, *s).inside, "k = {k}: {s:?}");
            }
            assert!(s.slack(&m) <= rate.powi(k as i32) * 0.25 + 1e-16, "k = {k}");
        }
    }

    // Classical scalar Newton on f written independently of n_theta_step.
    #[test]
    fn zero_tolerance_matches_scalar_newton() {
        let m = MajorantFunction::smale(1.0, 0.1).unwrap();
        let c = derive_certificate(&m, 0.0).unwrap();
        let seq = majorant_sequence(&m, &c, 0.0, MajorantState::ORIGIN, 8).unwrap();
        let mut t: f64 = 0.0;
        for s in &seq.states {
            assert_relative_eq!(s.t, t, max_relative = 1e-14);
            assert_eq!(s.eps, 0.0);
            let f = t / (1.0 - t) - 2.0 * t + 0.1;
            let df = 1.0 / ((1.0 - t) * (1.0 - t)) - 2.0;
            t -= f / df;
        }
    }
}
