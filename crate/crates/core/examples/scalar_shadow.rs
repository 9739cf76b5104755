//! The scalar sequence that dominates every inexact Newton run, for a few
//! tolerances.

use kantorovich::dynamics::{majorant_sequence, MajorantState};
use kantorovich::majorant::{derive_certificate, MajorantFunction};

fn main() -> kantorovich::Result<()> {
    let m = MajorantFunction::quadratic(2.0 / 3.0, 1.0 / 12.0)?;
    let cert = derive_certificate(&m, 0.0)?;
    println!("t* = {:.10}  lambda = {:.10}  theta_max = {:.6}", cert.t_star, cert.lambda, cert.theta_max);

    for frac in [0.0, 0.5, 1.0] {
        let theta = frac * cert.theta_max;
        let seq = majorant_sequence(&m, &cert, theta, MajorantState::ORIGIN, 60)?;
        println!("\ntheta = {theta:.4}: {} states, limit t = {:.10}", seq.states.len(), seq.limit);
        println!("{:>4} {:>14} {:>14} {:>14}", "k", "t", "eps", "f(t)+eps");
        for (k, s) in seq.states.iter().enumerate().take(8) {
            println!("{k:>4} {:>14.10} {:>14.6e} {:>14.6e}", s.t, s.eps, s.slack(&m));
        }
    }
    Ok(())
}
