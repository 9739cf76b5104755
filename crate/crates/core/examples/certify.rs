//! Certificates for the three closed-form majorant families, with and
//! without a perturbation radius.
//!
//! ```text
//! cargo run --example certify
//! ```

use kantorovich::harness::certificate_to_text;
use kantorovich::majorant::{derive_certificate, validate_majorant, MajorantFunction, DEFAULT_GRID};

fn main() -> kantorovich::Result<()> {
    let majorants = [
        ("quadratic L=2/3 b=1/12", MajorantFunction::quadratic(2.0 / 3.0, 1.0 / 12.0)?),
        ("smale gamma=1 b=0.1", MajorantFunction::smale(1.0, 0.1)?),
        ("self-concordant b=0.15", MajorantFunction::self_concordant(0.15)?),
    ];
    for (label, m) in &majorants {
        let report = validate_majorant(m, DEFAULT_GRID);
        println!("== {label} (hypotheses {})", if report.passed() { "ok" } else { "FAILED" });
        for rho in [0.0, 0.01] {
            let cert = derive_certificate(m, rho)?;
            print!("{}", certificate_to_text(label, &cert));
        }
        println!();
    }

    // beyond beta/2 there is no certificate
    let m = &majorants[0].1;
    match derive_certificate(m, 0.4) {
        Ok(_) => println!("unexpected certificate"),
        Err(e) => println!("rho = 0.4: {e}"),
    }
    Ok(())
}
