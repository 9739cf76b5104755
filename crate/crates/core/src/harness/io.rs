//! Key-value text form of certificates, and slack tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::majorant::Certificate;
use crate::verifier::ProbeReport;

/// `key = value` lines, floats in shortest round-trip form.
pub fn certificate_to_text(problem: &str, cert: &Certificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "problem = {problem}");
    for (k, v) in cert.fields() {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "h4 = {}", cert.h4_holds());
    out
}

/// Inverse of [`certificate_to_text`]; returns the problem name too.
pub fn certificate_from_text(text: &str) -> Result<(String, Certificate)> {
    let mut problem = None;
    let mut map = serde_json::Map::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Schema(format!("certificate line without `=`: {line}")))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "problem" => problem = Some(v.to_string()),
            "h4" => {}
            _ => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| Error::Schema(format!("certificate field `{k}` is not a number")))?;
                map.insert(k.to_string(), serde_json::Value::from(x));
            }
        }
    }
    let cert: Certificate = serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| Error::Schema(format!("certificate: {e}")))?;
    Ok((problem.unwrap_or_default(), cert))
}

/// Writes every recorded slack as `probe,index,slack` rows.
pub fn write_slacks(path: impl AsRef<Path>, reports: &[ProbeReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["probe", "index", "slack"])?;
    for r in reports {
        for (i, s) in &r.slacks {
            w.write_record([r.name.as_str(), &i.to_string(), &s.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::{derive_certificate, MajorantFunction};

    #[test]
    fn certificate_text_round_trip() {
        let m = MajorantFunction::smale(1.0, 0.1).unwrap();
        let cert = derive_certificate(&m, 0.01).unwrap();
        let text = certificate_to_text("demo", &cert);
        assert!(text.contains("kappa = "));
        let (name, back) = certificate_from_text(&text).unwrap();
        assert_eq!(name, "demo");
        assert_eq!(back, cert);
    }

    #[test]
    fn missing_field_is_an_error() {
        assert!(certificate_from_text("problem = x\nbeta = 1\n").is_err());
        assert!(certificate_from_text("beta 1\n").is_err());
    }
}
