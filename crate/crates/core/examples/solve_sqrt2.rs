//! Inexact Newton on `x² - 2 = 0` from `x0 = 1.5`, exact and inexact steps,
//! with the residual envelope alongside.

use kantorovich::harness::builtin;
use kantorovich::majorant::derive_certificate;
use kantorovich::solver::{inexact_newton_solve, SolveConfig, StepMode};

fn main() -> kantorovich::Result<()> {
    let loaded = builtin("sqrt2")?;
    let cert = derive_certificate(&loaded.majorant, 0.0)?;
    let b = loaded.majorant.value(0.0);

    for (theta, mode) in [
        (0.0, StepMode::IterativeInner),
        (0.25, StepMode::IterativeInner),
        (cert.theta_max, StepMode::worst_case()),
    ] {
        let cfg = SolveConfig {
            theta,
            step_mode: mode.clone(),
            ..SolveConfig::default()
        };
        let trace = inexact_newton_solve(&loaded.problem, &loaded.majorant, &cfg)?;
        println!("\ntheta = {theta:.4} ({mode:?})");
        println!("{:>4} {:>20} {:>12} {:>12}", "k", "z_k", "r_k", "envelope");
        let q = (1.0 + theta * theta) / 2.0;
        for r in trace.records.iter().take(10) {
            println!("{:>4} {:>20.16} {:>12.4e} {:>12.4e}", r.k, r.iterate[0], r.residual, q.powi(r.k as i32) * b);
        }
        println!("converged after {} steps to {}", trace.steps(), trace.final_iterate()[0]);
    }
    Ok(())
}
