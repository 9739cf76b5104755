use kantorovich::harness::{builtin_corpus, corpus_specs, ProblemSpec};
use kantorovich::majorant::{derive_certificate, validate_majorant};
use kantorovich::solver::{inexact_newton_solve, SolveConfig, StepMode};
use kantorovich::verifier::{check_trace, reference_solution, run_probes, DEFAULT_SEED};

#[test]
fn every_problem_passes_trace_checks() {
    for loaded in builtin_corpus() {
        let p = &loaded.problem;
        let m = &loaded.majorant;
        let cert = derive_certificate(m, 0.0).unwrap();
        let x_star = reference_solution(p).unwrap();
        for theta in [0.0, cert.theta_max / 2.0, cert.theta_max] {
            for mode in [StepMode::IterativeInner, StepMode::worst_case()] {
                let cfg = SolveConfig {
                    theta,
                    step_mode: mode.clone(),
                    ..SolveConfig::default()
                };
                let trace = inexact_newton_solve(p, m, &cfg).unwrap();
                assert!(trace.converged, "{} theta={theta} {mode:?}", p.name());
                let check = check_trace(p, &trace, m, &cert, &x_star).unwrap();
                for r in &check.reports {
                    assert!(r.passed, "{} theta={theta} {mode:?}: {r}", p.name());
                }
                assert!(p.distance(&x_star, p.base_point()) <= cert.t_star + 1e-9);
            }
        }
    }
}

#[test]
fn every_problem_passes_probes() {
    for loaded in builtin_corpus() {
        let reports = run_probes(&loaded.problem, &loaded.majorant, 500, DEFAULT_SEED).unwrap();
        for r in &reports {
            assert!(r.passed, "{}: {r}", loaded.spec.name);
            assert!(r.samples >= 250, "{}: {r}", loaded.spec.name);
        }
    }
}

#[test]
fn spec_round_trip_reproduces_certificates_bitwise() {
    for spec in corpus_specs() {
        let text = spec.to_json().unwrap();
        let back = ProblemSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        let a = spec.load().unwrap();
        let b = back.load().unwrap();
        let ca = derive_certificate(&a.majorant, 0.0).unwrap();
        let cb = derive_certificate(&b.majorant, 0.0).unwrap();
        for ((k, x), (_, y)) in ca.fields().iter().zip(cb.fields().iter()) {
            assert_eq!(x.to_bits(), y.to_bits(), "{}: {k}", spec.name);
        }
    }
}

#[test]
fn corpus_majorants_validate() {
    for loaded in builtin_corpus() {
        let report = validate_majorant(&loaded.majorant, 1024);
        assert!(report.passed(), "{}\n{report}", loaded.spec.name);
    }
}

#[test]
fn known_zeros() {
    let find = |name: &str| {
        builtin_corpus()
            .into_iter()
            .find(|c| c.spec.name == name)
            .unwrap()
    };
    let root = |name: &str| reference_solution(&find(name).problem).unwrap();
    assert!((root("sqrt2")[0] - std::f64::consts::SQRT_2).abs() < 1e-15);
    let c = root("circle_line");
    assert!((c[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    assert!((c[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    assert!((root("log_barrier")[0] - 1.0).abs() < 1e-15);
    assert!((root("exp_analytic")[0] - 1.1f64.ln()).abs() < 1e-15);
    let p = root("poly3");
    for (got, want) in p.iter().zip([1.1, 0.9, 1.0]) {
        assert!((got - want).abs() < 1e-14, "{p}");
    }
}
