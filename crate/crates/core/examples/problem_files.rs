//! Defining a problem as JSON, loading it, and what happens when the
//! declared majorant constant is too small.

use kantorovich::harness::ProblemSpec;
use kantorovich::majorant::derive_certificate;
use kantorovich::solver::{inexact_newton_solve, SolveConfig};

const SYSTEM: &str = r#"{
  "name": "two_parabolas",
  "family": "polynomial_system",
  "parameters": {
    "equations": [
      [{"coef": 1.0, "powers": [2, 0]}, {"coef": -1.0, "powers": [0, 1]}, {"coef": -0.1, "powers": [0, 0]}],
      [{"coef": 1.0, "powers": [0, 2]}, {"coef": -1.0, "powers": [1, 0]}, {"coef": 0.05, "powers": [0, 0]}]
    ]
  },
  "x0": [1.0, 1.0],
  "majorant": {"family": "quadratic", "L": 2.0, "b": 0.05}
}"#;

fn main() -> kantorovich::Result<()> {
    let spec = ProblemSpec::from_json(SYSTEM)?;
    match spec.load() {
        Ok(loaded) => {
            let cert = derive_certificate(&loaded.majorant, 0.0)?;
            println!("loaded {}; spot-check ratio {:.4}", spec.name, loaded.spot_check_ratio);
            let cfg = SolveConfig {
                theta: cert.theta_max,
                ..SolveConfig::default()
            };
            let trace = inexact_newton_solve(&loaded.problem, &loaded.majorant, &cfg)?;
            println!("solution {:?} after {} steps", trace.final_iterate().as_slice(), trace.steps());
        }
        Err(e) => println!("rejected: {e}"),
    }

    let mut understated = spec.clone();
    understated.majorant = kantorovich::majorant::Family::Quadratic { lipschitz: 0.5, b: 0.05 };
    match understated.load() {
        Ok(_) => println!("understated constant accepted"),
        Err(e) => println!("understated constant rejected: {e}"),
    }

    println!("\n{}", spec.to_json()?);
    Ok(())
}
