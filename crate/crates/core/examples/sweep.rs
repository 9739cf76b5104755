//! A small tolerance by offset grid on the log-barrier problem, written to a
//! temporary directory.

use kantorovich::harness::{builtin, run_sweep, SweepGrid, SweepOptions};

fn main() -> kantorovich::Result<()> {
    let loaded = builtin("log_barrier")?;
    let out = std::env::temp_dir().join("kantorovich-sweep-example");
    let opts = SweepOptions {
        grid: SweepGrid { thetas: 5, rhos: 3 },
        ..SweepOptions::default()
    };
    let cells = run_sweep(&loaded, &opts, Some(&out))?;
    println!("{:>8} {:>8} {:>6} {:>10} {:>6}", "rho", "theta", "steps", "env_ratio", "check");
    for c in &cells {
        println!(
            "{:>8.5} {:>8.5} {:>6} {:>10.4} {:>6}",
            c.rho,
            c.theta,
            c.steps,
            c.max_envelope_ratio,
            if c.check_passed { "pass" } else { "FAIL" }
        );
    }
    println!("tables in {}", out.display());
    Ok(())
}
