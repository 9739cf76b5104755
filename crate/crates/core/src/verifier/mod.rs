//! Independent checks of operator-versus-majorant inequalities and of
//! solver traces against the convergence bounds.
//!
//! Everything here is recomputed from fresh evaluations of `F`, `F'` and
//! the majorant; nothing is read back from the solver except the iterates
//! and forcing terms stored in a trace.

mod probes;
mod sampling;
mod trace_check;

use std::fmt;

use serde::Serialize;

pub use probes::{
    probe_banach_bound, probe_error_monotonicity, probe_linearization_bounds, probe_residual_envelope, run_probes,
};
pub use sampling::{banach_samples, pair_samples, point_samples, BanachSample, DEFAULT_SEED};
pub use trace_check::{check_trace, reference_solution, TraceCheck, RATIO_CUTOFF};

/// Absolute tolerance on every slack.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub measured: f64,
    pub bound: f64,
}

/// Outcome of checking one inequality over a set of samples or steps.
///
/// Slack is `bound - measured`, signed; the report passes iff the smallest
/// slack is at least `-tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub name: String,
    pub samples: usize,
    pub rejected: usize,
    pub min_slack: f64,
    pub max_slack: f64,
    pub tolerance: f64,
    pub first_violation: Option<Violation>,
    pub passed: bool,
    /// Informational reports do not affect an overall verdict.
    pub gating: bool,
    pub note: Option<String>,
    #[serde(skip)]
    pub slacks: Vec<(usize, f64)>,
}

impl ProbeReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            rejected: 0,
            min_slack: f64::INFINITY,
            max_slack: f64::NEG_INFINITY,
            tolerance,
            first_violation: None,
            passed: true,
            gating: true,
            note: None,
            slacks: Vec::new(),
        }
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Records `measured ≤ bound` for sample `index`.
    pub fn record(&mut self, index: usize, measured: f64, bound: f64) {
        let slack = bound - measured;
        // NaN counts as a violation
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        self.samples += 1;
        self.min_slack = self.min_slack.min(slack);
        self.max_slack = self.max_slack.max(slack);
        self.slacks.push((index, slack));
        if slack < -self.tolerance {
            self.passed = false;
            if self.first_violation.is_none() {
                self.first_violation = Some(Violation { index, measured, bound });
            }
        }
    }

    /// Counts a sample that failed the probe's precondition.
    pub fn reject(&mut self) {
        self.rejected += 1;
    }

    /// Indices of all violating samples.
    pub fn violations(&self) -> Vec<usize> {
        self.slacks
            .iter()
            .filter(|(_, s)| *s < -self.tolerance)
            .map(|(i, _)| *i)
            .collect()
    }
}

impl fmt::Display for ProbeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.passed, self.gating) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "fail (informational)",
        };
        write!(
            f,
            "{:<32} {verdict:<5} samples={} rejected={} min_slack={:.3e}",
            self.name, self.samples, self.rejected, self.min_slack
        )?;
        if let Some(v) = &self.first_violation {
            write!(f, " first_violation=#{} ({:.6e} > {:.6e})", v.index, v.measured, v.bound)?;
        }
        if let Some(n) = &self.note {
            write!(f, " [{n}]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_tracks_slack_and_first_violation() {
        let mut r = ProbeReport::new("demo", 1e-10);
        r.record(0, 1.0, 2.0);
        r.record(1, 2.0, 2.0 - 5e-11);
        assert!(r.passed);
        r.record(2, 3.0, 2.0);
        r.record(3, 4.0, 2.0);
        r.reject();
        assert!(!r.passed);
        assert_eq!(r.first_violation.as_ref().unwrap().index, 2);
        assert_eq!(r.min_slack, -2.0);
        assert_eq!(r.max_slack, 1.0);
        assert_eq!(r.violations(), vec![2, 3]);
        assert_eq!((r.samples, r.rejected), (4, 1));
    }

    #[test]
    fn nan_is_a_violation() {
        let mut r = ProbeReport::new("nan", 1e-10);
        r.record(0, f64::NAN, 1.0);
        assert!(!r.passed);
    }
}
