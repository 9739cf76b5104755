//! Per-iteration records of a solve and their CSV form.
//!
//! The CSV file starts with `# key = value` metadata lines followed by a
//! header and one row per iterate. Floats are written in shortest
//! round-trip form, so reading a written trace reproduces it bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::MajorantState;
use crate::error::{Error, Result};

/// How the forcing term is chosen at each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSchedule {
    /// `θ_k = θ` for every step.
    Fixed,
    /// `θ_k = min(Θ, factor · r_k)` with `r_k` the preconditioned residual.
    Adaptive { factor: f64 },
}

impl ThetaSchedule {
    fn encode(&self) -> String {
        match self {
            ThetaSchedule::Fixed => "fixed".into(),
            ThetaSchedule::Adaptive { factor } => format!("adaptive:{factor}"),
        }
    }

    fn decode(s: &str) -> Result<Self> {
        if s == "fixed" {
            return Ok(ThetaSchedule::Fixed);
        }
        s.strip_prefix("adaptive:")
            .and_then(|f| f.parse().ok())
            .map(|factor| ThetaSchedule::Adaptive { factor })
            .ok_or_else(|| Error::Schema(format!("unknown schedule `{s}`")))
    }
}

/// Iterate `z_k` and, except for the last record, the step taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub iterate: DVector<f64>,
    /// `‖z_k - z0‖`.
    pub dist_to_start: f64,
    /// `‖A0⁻¹ F(z_k)‖` with `A0 = F'(z0)`.
    pub residual: f64,
    /// `‖S_k‖`.
    pub step_norm: Option<f64>,
    /// `‖A0⁻¹[F(z_k) + F'(z_k) S_k]‖ / ‖A0⁻¹ F(z_k)‖`.
    pub achieved_rel_residual: Option<f64>,
    /// Forcing term `θ_k` the step had to meet.
    pub theta: Option<f64>,
    pub inner_iterations: Option<usize>,
    /// Scalar shadow `(t_k, ε_k)` in shifted coordinates.
    pub state: Option<MajorantState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub problem: String,
    pub rho: f64,
    /// Nominal tolerance (the fixed θ, or Θ for adaptive runs).
    pub theta: f64,
    pub schedule: ThetaSchedule,
    pub converged: bool,
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.records.first().map_or(0, |r| r.iterate.len())
    }

    pub fn start_point(&self) -> &DVector<f64> {
        &self.records[0].iterate
    }

    pub fn final_iterate(&self) -> &DVector<f64> {
        &self.records.last().expect("trace has at least one record").iterate
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }

    /// Fault injection: replaces `z_{k+1}` by `z_k + factor·S_k`, leaving
    /// every other iterate untouched. Only the step norm and distance columns
    /// are updated; residuals are left as recorded.
    pub fn with_scaled_step(&self, k: usize, factor: f64) -> Self {
        let mut out = self.clone();
        assert!(k + 1 < out.records.len(), "step {k} not in trace");
        let zk = out.records[k].iterate.clone();
        let step = &out.records[k + 1].iterate - &zk;
        let next = &zk + step * factor;
        let start = out.records[0].iterate.clone();
        out.records[k].step_norm = out.records[k].step_norm.map(|s| s * factor.abs());
        out.records[k + 1].dist_to_start = (&next - &start).norm();
        out.records[k + 1].iterate = next;
        out
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut text = String::new();
        let _ = writeln!(text, "# problem = {}", self.problem);
        let _ = writeln!(text, "# rho = {}", self.rho);
        let _ = writeln!(text, "# theta = {}", self.theta);
        let _ = writeln!(text, "# schedule = {}", self.schedule.encode());
        let _ = writeln!(text, "# converged = {}", self.converged);
        let _ = writeln!(text, "# dim = {}", self.dim());

        let mut w = csv::Writer::from_writer(Vec::new());
        let n = self.dim();
        let mut header = vec!["k".to_string()];
        header.extend((0..n).map(|i| format!("z{i}")));
        header.extend(
            [
                "dist_to_start",
                "residual",
                "step_norm",
                "achieved_rel_residual",
                "theta",
                "inner_iterations",
                "t",
                "eps",
            ]
            .map(String::from),
        );
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.records {
            let mut row = vec![r.k.to_string()];
            row.extend(r.iterate.iter().map(|x| x.to_string()));
            row.push(r.dist_to_start.to_string());
            row.push(r.residual.to_string());
            row.push(opt(r.step_norm));
            row.push(opt(r.achieved_rel_residual));
            row.push(opt(r.theta));
            row.push(r.inner_iterations.map_or(String::new(), |i| i.to_string()));
            row.push(opt(r.state.map(|s| s.t)));
            row.push(opt(r.state.map(|s| s.eps)));
            w.write_record(&row)?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        text.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut meta = std::collections::BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let get = |key: &str| {
            meta.get(key)
                .cloned()
                .ok_or_else(|| Error::Schema(format!("trace metadata `{key}` missing")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Schema(format!("trace metadata `{key}` is not a number")))
        };
        let problem = get("problem")?;
        let rho = num("rho")?;
        let theta = num("theta")?;
        let schedule = ThetaSchedule::decode(&get("schedule")?)?;
        let converged = get("converged")? == "true";
        let n: usize = get("dim")?
            .parse()
            .map_err(|_| Error::Schema("trace metadata `dim` is not an integer".into()))?;

        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row?;
            if row.len() != n + 9 {
                return Err(Error::Schema(format!("trace row has {} fields, expected {}", row.len(), n + 9)));
            }
            let field = |i: usize| -> Result<Option<f64>> {
                let s = &row[i];
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|_| Error::Schema(format!("trace field `{s}` is not a number")))
                }
            };
            let req = |i: usize| -> Result<f64> {
                field(i)?.ok_or_else(|| Error::Schema(format!("trace column {i} is empty")))
            };
            let k = row[0]
                .parse()
                .map_err(|_| Error::Schema(format!("bad iteration index `{}`", &row[0])))?;
            let mut iterate = DVector::zeros(n);
            for i in 0..n {
                iterate[i] = req(1 + i)?;
            }
            let inner = if row[n + 6].is_empty() {
                None
            } else {
                Some(
                    row[n + 6]
                        .parse()
                        .map_err(|_| Error::Schema("bad inner iteration count".into()))?,
                )
            };
            let state = match (field(n + 7)?, field(n + 8)?) {
                (Some(t), Some(eps)) => Some(MajorantState { t, eps }),
                _ => None,
            };
            records.push(IterationRecord {
                k,
                iterate,
                dist_to_start: req(n + 1)?,
                residual: req(n + 2)?,
                step_norm: field(n + 3)?,
                achieved_rel_residual: field(n + 4)?,
                theta: field(n + 5)?,
                inner_iterations: inner,
                state,
            });
        }
        if records.is_empty() {
            return Err(Error::Schema("trace has no rows".into()));
        }
        Ok(Self {
            problem,
            rho,
            theta,
            schedule,
            converged,
            records,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> IterationTrace {
        let rec = |k: usize, z: &[f64], last: bool| IterationRecord {
            k,
            iterate: DVector::from_row_slice(z),
            dist_to_start: 0.1 * k as f64 + 1.0 / 3.0,
            residual: 1e-3_f64.powi(k as i32) / 7.0,
            step_norm: (!last).then_some(0.123456789012345),
            achieved_rel_residual: (!last).then_some(0.1),
            theta: (!last).then_some(0.1),
            inner_iterations: (!last).then_some(2),
            state: Some(MajorantState::new(0.01 * k as f64, 1e-17)),
        };
        IterationTrace {
            problem: "demo".into(),
            rho: 0.05,
            theta: 0.1,
            schedule: ThetaSchedule::Adaptive { factor: 0.5 },
            converged: true,
            records: vec![rec(0, &[1.5, -0.2], false), rec(1, &[std::f64::consts::SQRT_2, 1e-300], true)],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let text = t.to_csv_string().unwrap();
        let back = IterationTrace::from_csv_str(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn missing_metadata_is_an_error() {
        let text = sample().to_csv_string().unwrap().replace("# rho = 0.05\n", "");
        assert!(matches!(IterationTrace::from_csv_str(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn scaled_step_moves_one_iterate() {
        let t = sample();
        let bad = t.with_scaled_step(0, 2.0);
        let expected = &t.records[0].iterate + (&t.records[1].iterate - &t.records[0].iterate) * 2.0;
        assert_eq!(bad.records[1].iterate, expected);
        assert_eq!(bad.records[0].iterate, t.records[0].iterate);
        assert_eq!(bad.records[0].step_norm, Some(2.0 * 0.123456789012345));
    }
}
