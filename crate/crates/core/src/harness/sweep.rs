//! Tolerance by perturbation-radius sweeps.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::majorant::{derive_certificate, landmarks};
use crate::solver::{inexact_newton_solve, SolveConfig, StepMode};
use crate::trace::IterationTrace;
use crate::verifier::{check_trace, reference_solution};

use super::spec::LoadedProblem;

/// Grid shape: `thetas` values evenly spaced in `[0, Θ_ρ]` and `rhos` values
/// evenly spaced in `[0, 0.9 β/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepGrid {
    pub thetas: usize,
    pub rhos: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { thetas: 9, rhos: 5 }
    }
}

impl FromStr for SweepGrid {
    type Err = Error;

    /// Parses `"<thetas>x<rhos>"`, e.g. `"9x5"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Schema(format!("grid must look like 9x5, got `{s}`"));
        let (a, b) = s.split_once('x').ok_or_else(bad)?;
        let thetas: usize = a.trim().parse().map_err(|_| bad())?;
        let rhos: usize = b.trim().parse().map_err(|_| bad())?;
        if thetas == 0 || rhos == 0 {
            return Err(bad());
        }
        Ok(Self { thetas, rhos })
    }
}

fn spaced(hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|i| if i + 1 == count { hi } else { hi * i as f64 / (count - 1) as f64 })
        .collect()
}

/// One solve of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub rho_index: usize,
    pub theta_index: usize,
    pub rho: f64,
    pub theta: f64,
    pub theta_max: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub steps: usize,
    pub converged: bool,
    pub final_residual: f64,
    /// `max_k r_k / (∏(1+θ²)/2 · (f(0)+2ρ))`; at most 1 when the envelope holds.
    pub max_envelope_ratio: f64,
    pub max_distance: f64,
    pub final_error: f64,
    pub check_passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub grid: SweepGrid,
    pub step_mode: StepMode,
    pub max_iterations: usize,
    pub stop_residual: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            grid: SweepGrid::default(),
            step_mode: StepMode::worst_case(),
            max_iterations: 200,
            stop_residual: 1e-13,
        }
    }
}

fn envelope_ratio(trace: &IterationTrace, base: f64) -> f64 {
    let mut env = base;
    let mut worst = 0.0f64;
    for r in &trace.records {
        worst = worst.max(r.residual / env);
        if let Some(th) = r.theta {
            env *= (1.0 + th * th) / 2.0;
        }
    }
    worst
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn cell_path(dir: &Path, i: usize, j: usize) -> PathBuf {
    dir.join(format!("cell_r{i}_t{j}.csv"))
}

/// Runs every grid cell (in parallel). Start points sit at distance `ρ` from
/// `x0` along the unit all-ones direction. With `out_dir`, each cell's trace
/// is written atomically and the rows are merged into `sweep.csv`.
pub fn run_sweep(loaded: &LoadedProblem, opts: &SweepOptions, out_dir: Option<&Path>) -> Result<Vec<SweepCell>> {
    let p = &loaded.problem;
    let m = &loaded.majorant;
    let beta = landmarks(m)?.beta;
    let x_star = reference_solution(p)?;
    let rhos = spaced(0.9 * beta / 2.0, opts.grid.rhos);
    let dir = p.norm().unit_ones(p.dim());
    if let Some(d) = out_dir {
        std::fs::create_dir_all(d)?;
    }

    let mut jobs = Vec::new();
    for (i, &rho) in rhos.iter().enumerate() {
        let cert = derive_certificate(m, rho)?;
        for (j, theta) in spaced(cert.theta_max, opts.grid.thetas).into_iter().enumerate() {
            jobs.push((i, j, rho, theta, cert));
        }
    }

    let mut cells: Vec<SweepCell> = jobs
        .into_par_iter()
        .map(|(i, j, rho, theta, cert)| -> Result<SweepCell> {
            let start: DVector<f64> = p.base_point() + &dir * rho;
            let cfg = SolveConfig {
                theta,
                rho,
                start_point: Some(start),
                max_iterations: opts.max_iterations,
                stop_residual: opts.stop_residual,
                step_mode: opts.step_mode.clone(),
                ..SolveConfig::default()
            };
            let mut cell = SweepCell {
                rho_index: i,
                theta_index: j,
                rho,
                theta,
                theta_max: cert.theta_max,
                kappa: cert.kappa,
                lambda: cert.lambda,
                steps: 0,
                converged: false,
                final_residual: f64::NAN,
                max_envelope_ratio: f64::NAN,
                max_distance: f64::NAN,
                final_error: f64::NAN,
                check_passed: false,
                error: None,
            };
            let trace = match inexact_newton_solve(p, m, &cfg) {
                Ok(t) => t,
                Err(e) => {
                    cell.error = Some(e.to_string());
                    return Ok(cell);
                }
            };
            cell.steps = trace.steps();
            cell.converged = trace.converged;
            cell.final_residual = trace.final_residual();
            cell.max_envelope_ratio = envelope_ratio(&trace, m.value(0.0) + 2.0 * rho);
            cell.max_distance = trace.records.iter().map(|r| r.dist_to_start).fold(0.0, f64::max);
            cell.final_error = p.distance(&x_star, trace.final_iterate());
            match check_trace(p, &trace, m, &cert, &x_star) {
                Ok(check) => cell.check_passed = check.passed(),
                Err(e) => cell.error = Some(e.to_string()),
            }
            if let Some(d) = out_dir {
                write_atomic(&cell_path(d, i, j), &trace.to_csv_string()?)?;
            }
            Ok(cell)
        })
        .collect::<Result<_>>()?;
    cells.sort_by_key(|c| (c.rho_index, c.theta_index));

    if let Some(d) = out_dir {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &cells {
            w.serialize(c)?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        write_atomic(&d.join("sweep.csv"), &String::from_utf8(body).expect("csv output is utf-8"))?;
    }
    Ok(cells)
}
