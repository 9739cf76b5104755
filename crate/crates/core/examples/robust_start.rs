//! Starting away from the point where the majorant was built: the solve is
//! still certified as long as the offset stays below beta/2.

use nalgebra::DVector;

use kantorovich::harness::builtin;
use kantorovich::majorant::{derive_certificate, shift_majorant};
use kantorovich::solver::{inexact_newton_solve, SolveConfig, StepMode};
use kantorovich::verifier::{check_trace, reference_solution};

fn main() -> kantorovich::Result<()> {
    let loaded = builtin("circle_line")?;
    let (p, m) = (&loaded.problem, &loaded.majorant);
    let x_star = reference_solution(p)?;
    let x0 = p.base_point().clone();

    for rho in [0.0, 0.01, 0.02] {
        let cert = derive_certificate(m, rho)?;
        let g = shift_majorant(m, rho)?;
        println!("rho = {rho}: theta_max = {:.5}, lambda = {:.5}, g(0) = {:.5}", cert.theta_max, cert.lambda, g.value(0.0));
        for angle in [0.0, 2.0, 4.0] {
            let dir = DVector::from_vec(vec![f64::cos(angle), f64::sin(angle)]);
            let start = &x0 + &dir * (rho / p.norm().norm(&dir));
            let cfg = SolveConfig {
                theta: cert.theta_max,
                rho,
                start_point: Some(start),
                step_mode: StepMode::worst_case(),
                ..SolveConfig::default()
            };
            let trace = inexact_newton_solve(p, m, &cfg)?;
            let check = check_trace(p, &trace, m, &cert, &x_star)?;
            println!(
                "  angle {angle}: {} steps, error {:.2e}, checks {}",
                trace.steps(),
                p.distance(&x_star, trace.final_iterate()),
                if check.passed() { "pass" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
