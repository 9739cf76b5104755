//! Runs the sampled inequality probes and a trace check on every built-in
//! problem.

use kantorovich::harness::builtin_corpus;
use kantorovich::majorant::derive_certificate;
use kantorovich::solver::{inexact_newton_solve, SolveConfig};
use kantorovich::verifier::{check_trace, reference_solution, run_probes, DEFAULT_SEED};

fn main() -> kantorovich::Result<()> {
    for loaded in builtin_corpus() {
        let (p, m) = (&loaded.problem, &loaded.majorant);
        println!("== {}", p.name());
        for r in run_probes(p, m, 300, DEFAULT_SEED)? {
            println!("  {r}");
        }
        let cert = derive_certificate(m, 0.0)?;
        let cfg = SolveConfig {
            theta: 0.5 * cert.theta_max,
            ..SolveConfig::default()
        };
        let trace = inexact_newton_solve(p, m, &cfg)?;
        let check = check_trace(p, &trace, m, &cert, &reference_solution(p)?)?;
        println!("  trace: {} steps, checks {}", trace.steps(), if check.passed() { "pass" } else { "FAIL" });

        // a corrupted trace must be caught
        let bad = trace.with_scaled_step(0, 2.0);
        let caught = check_trace(p, &bad, m, &cert, &reference_solution(p)?)?;
        println!("  doubled first step detected: {}", !caught.passed());
    }
    Ok(())
}
