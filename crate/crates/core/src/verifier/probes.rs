use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sampling::{banach_samples, pair_samples, point_samples, BanachSample};
use super::{ProbeReport, DEFAULT_TOLERANCE};
use crate::error::Result;
use crate::majorant::{landmarks, linearization_error, MajorantFunction};
use crate::problem::OperatorProblem;

const ON_BALL: f64 = 1e-12;

fn base_inverse(p: &OperatorProblem) -> nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
    p.jacobian(p.base_point()).lu()
}

fn solve_or_nan(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, v: &DVector<f64>) -> DVector<f64> {
    lu.solve(v).unwrap_or_else(|| DVector::from_element(v.len(), f64::NAN))
}

/// `‖F'(x)⁻¹ F'(x0)‖ ≤ 1/|f'(t)|` for `‖x - x0‖ ≤ t < t̄`.
pub fn probe_banach_bound(p: &OperatorProblem, m: &MajorantFunction, samples: &[BanachSample]) -> Result<ProbeReport> {
    let t_bar = landmarks(m)?.t_bar;
    let a0 = p.jacobian(p.base_point());
    let mut report = ProbeReport::new("banach_bound", DEFAULT_TOLERANCE);
    for (i, s) in samples.iter().enumerate() {
        let d = p.distance(&s.x, p.base_point());
        if !(s.t >= 0.0 && s.t < t_bar && d <= s.t * (1.0 + ON_BALL) + ON_BALL && d < p.domain_radius()) {
            report.reject();
            continue;
        }
        let measured = match p.jacobian(&s.x).lu().solve(&a0) {
            Some(m) => p.norm().operator_norm(&m),
            None => f64::INFINITY,
        };
        report.record(i, measured, -1.0 / m.derivative(s.t));
    }
    Ok(report)
}

/// Two bounds on `‖A0⁻¹ E_F(y, x)‖` with `t = ‖x - x0‖`, `s = ‖y - x‖`:
/// `e_f(t + s, t)` and `½ (f'(t+s) - f'(t)) s`.
pub fn probe_linearization_bounds(
    p: &OperatorProblem,
    m: &MajorantFunction,
    pairs: &[(DVector<f64>, DVector<f64>)],
) -> Vec<ProbeReport> {
    let lu = base_inverse(p);
    let r = m.radius();
    let mut ef = ProbeReport::new("linearization_ef", DEFAULT_TOLERANCE);
    let mut quad = ProbeReport::new("linearization_quadratic", DEFAULT_TOLERANCE);
    for (i, (x, y)) in pairs.iter().enumerate() {
        let t = p.distance(x, p.base_point());
        let s = p.distance(y, x);
        if !(t + s < r && t + s < p.domain_radius()) {
            ef.reject();
            quad.reject();
            continue;
        }
        let err: DVector<f64> = p.residual(y) - p.residual(x) - p.jacobian(x) * (y - x);
        let measured = p.norm().norm(&solve_or_nan(&lu, &err));
        ef.record(i, measured, linearization_error(m, t + s, t));
        if s > 0.0 {
            quad.record(i, measured, 0.5 * (m.derivative(t + s) - m.derivative(t)) * s);
        }
    }
    vec![ef, quad]
}

/// For `y ∈ B(x0, R)` with `d = ‖y - x0‖`:
/// `-f(d) ≤ ‖A0⁻¹F(y)‖ ≤ f(d) + 2d` and `‖A0⁻¹F'(y)‖ ≤ 2 + f'(d)`.
pub fn probe_residual_envelope(p: &OperatorProblem, m: &MajorantFunction, points: &[DVector<f64>]) -> Vec<ProbeReport> {
    let lu = base_inverse(p);
    let mut lower = ProbeReport::new("residual_lower", DEFAULT_TOLERANCE);
    let mut upper = ProbeReport::new("residual_upper", DEFAULT_TOLERANCE);
    let mut growth = ProbeReport::new("jacobian_growth", DEFAULT_TOLERANCE);
    for (i, y) in points.iter().enumerate() {
        let d = p.distance(y, p.base_point());
        if !(d < m.radius() && d < p.domain_radius()) {
            lower.reject();
            upper.reject();
            growth.reject();
            continue;
        }
        let r = p.norm().norm(&solve_or_nan(&lu, &p.residual(y)));
        let f = m.value(d);
        // -f(d) ≤ r  as  -r ≤ f(d)
        lower.record(i, -r, f);
        upper.record(i, r, f + 2.0 * d);
        let scaled: DMatrix<f64> = lu
            .solve(&p.jacobian(y))
            .unwrap_or_else(|| DMatrix::from_element(p.dim(), p.dim(), f64::NAN));
        growth.record(i, p.norm().operator_norm(&scaled), 2.0 + m.derivative(d));
    }
    vec![lower, upper, growth]
}

/// Scalar check `e_f(a + b, b) ≤ e_f(t + s, t)` for `0 ≤ b ≤ t`,
/// `0 ≤ a ≤ s`, `t + s < R`.
pub fn probe_error_monotonicity(m: &MajorantFunction, count: usize, seed: u64) -> ProbeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = m.radius();
    let mut report = ProbeReport::new("error_monotonicity", DEFAULT_TOLERANCE);
    for i in 0..count {
        let total = 0.999 * r * rng.gen::<f64>();
        let t = total * rng.gen::<f64>();
        let s = total - t;
        let b = t * rng.gen::<f64>();
        let a = s * rng.gen::<f64>();
        report.record(i, linearization_error(m, a + b, b), linearization_error(m, t + s, t));
    }
    report
}

/// All operator probes on seeded samples, plus the scalar monotonicity check.
pub fn run_probes(p: &OperatorProblem, m: &MajorantFunction, count: usize, seed: u64) -> Result<Vec<ProbeReport>> {
    let mut out = vec![probe_banach_bound(p, m, &banach_samples(p, m, count, seed)?)?];
    out.extend(probe_linearization_bounds(p, m, &pair_samples(p, m, count, seed.wrapping_add(1))));
    out.extend(probe_residual_envelope(p, m, &point_samples(p, m, count, seed.wrapping_add(2))));
    out.push(probe_error_monotonicity(m, count, seed.wrapping_add(3)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormSpec;
    use crate::problem::FnMap;
    use approx::assert_relative_eq;
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

    fn pt(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn banach_equality_cases() {
        let (p, m) = sqrt2();
        let r = probe_banach_bound(
            &p,
            &m,
            &[BanachSample { x: pt(1.4), t: 0.1 }, BanachSample { x: pt(1.5), t: 0.0 }],
        )
        .unwrap();
        assert!(r.passed, "{r}");
        assert_eq!(r.samples, 2);
        assert!(r.min_slack.abs() < 1e-14);
        // sample too far for its t
        let bad = probe_banach_bound(&p, &m, &[BanachSample { x: pt(1.2), t: 0.1 }]).unwrap();
        assert_eq!((bad.samples, bad.rejected), (0, 1));
    }

    #[test]
    fn linearization_equality_case() {
        let (p, m) = sqrt2();
        let reports = probe_linearization_bounds(&p, &m, &[(pt(1.5), pt(1.4)), (pt(1.45), pt(1.45))]);
        let ef = &reports[0];
        assert!(ef.passed && ef.samples == 2);
        assert!(ef.min_slack.abs() < 1e-15);
        assert_relative_eq!(ef.slacks[0].1, 0.0, epsilon = 1e-16);
        // y = x contributes only to the first form
        assert_eq!(reports[1].samples, 1);
    }

    #[test]
    fn residual_envelope_example() {
        let (p, m) = sqrt2();
        let reports = probe_residual_envelope(&p, &m, &[pt(1.45), pt(1.5)]);
        assert!(reports.iter().all(|r| r.passed));
        // upper slack at y = 1.45: f(0.05) + 0.1 - 0.1025/3
        let f = 0.05 * 0.05 / 3.0 - 0.05 + 1.0 / 12.0;
        assert_relative_eq!(reports[1].slacks[0].1, f + 0.1 - 0.1025 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn suite_passes_on_samples() {
        let (p, m) = sqrt2();
        for r in run_probes(&p, &m, 200, 3).unwrap() {
            assert!(r.passed, "{r}");
            assert!(r.samples > 100, "{r}");
        }
    }

    #[test]
    fn understated_majorant_is_caught() {
        // L = 0.5 understates the true constant 2/3
        let (p, _) = sqrt2();
        let m = MajorantFunction::quadratic(0.5, 1.0 / 12.0).unwrap();
        let reports = probe_linearization_bounds(&p, &m, &pair_samples(&p, &m, 200, 1));
        assert!(!reports[0].passed);
    }
}
