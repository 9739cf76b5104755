//! Fixed tolerance versus `θ_k = min(Θ, r_k)`: the adaptive schedule turns
//! linear convergence into superlinear.

use kantorovich::harness::builtin;
use kantorovich::majorant::derive_certificate;
use kantorovich::solver::{adaptive_theta_solve, inexact_newton_solve, SolveConfig, StepMode};
use kantorovich::verifier::reference_solution;

fn main() -> kantorovich::Result<()> {
    let loaded = builtin("circle_line")?;
    let (p, m) = (&loaded.problem, &loaded.majorant);
    let cert = derive_certificate(m, 0.0)?;
    let x_star = reference_solution(p)?;
    let cfg = SolveConfig {
        theta: cert.theta_max,
        step_mode: StepMode::worst_case(),
        stop_residual: 1e-15,
        ..SolveConfig::default()
    };

    let fixed = inexact_newton_solve(p, m, &cfg)?;
    let adaptive = adaptive_theta_solve(p, m, 1.0, &cfg)?;
    for (label, trace) in [("fixed", &fixed), ("adaptive", &adaptive)] {
        println!("{label}: {} steps", trace.steps());
        let errs: Vec<f64> = trace.records.iter().map(|r| p.distance(&x_star, &r.iterate)).collect();
        for (k, w) in errs.windows(2).enumerate().take(12) {
            let theta = trace.records[k].theta.unwrap_or(0.0);
            println!("  k={k:>2} theta={theta:.3e} e={:.3e} ratio={:.3e}", w[0], w[1] / w[0]);
        }
    }
    Ok(())
}
