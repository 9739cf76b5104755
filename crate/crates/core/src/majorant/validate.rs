use std::fmt;

use super::MajorantFunction;
use crate::roots::find_bracket;

/// Default number of grid points for [`validate_majorant`].
pub const DEFAULT_GRID: usize = 1024;

/// Relative tolerance for `f'` against a central difference of `f`.
pub const FD_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of checking h1-h3 and derivative consistency on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub grid_size: usize,
    pub entries: Vec<CheckEntry>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let mark = if e.passed { "pass" } else { "FAIL" };
            writeln!(f, "{:<16} {mark}  {}", e.name, e.detail)?;
        }
        Ok(())
    }
}

fn entry(name: &'static str, passed: bool, detail: String) -> CheckEntry {
    CheckEntry {
        name,
        passed,
        detail,
    }
}

/// Largest relative gap between `f'` and a central difference of `f` over
/// `points` interior points of `[0, R)`. The step shrinks near the ends so
/// that it never crosses a pole at `R`.
pub fn derivative_consistency(m: &MajorantFunction, points: usize) -> (f64, f64) {
    let r = m.radius();
    let mut worst = 0.0f64;
    let mut worst_t = 0.0;
    for i in 1..=points {
        let t = r * i as f64 / (points + 1) as f64;
        let h = 1e-4 * t.min(r - t).min(1.0);
        let fd = (m.value(t + h) - m.value(t - h)) / (2.0 * h);
        let d = m.derivative(t);
        let gap = (fd - d).abs() / d.abs().max(1.0);
        if !(gap <= worst) {
            worst = gap;
            worst_t = t;
        }
    }
    (worst, worst_t)
}

/// Checks h1, h2 (on a grid), h3 (by sign-change scan) and the
/// finite-difference consistency of `f'`.
///
/// Failures are report entries, never errors.
pub fn validate_majorant(m: &MajorantFunction, grid_size: usize) -> ValidationReport {
    let grid_size = grid_size.max(3);
    let r = m.radius();
    let mut entries = Vec::with_capacity(5);

    let f0 = m.value(0.0);
    let d0 = m.derivative(0.0);
    entries.push(entry(
        "h1",
        f0 > 0.0 && (d0 + 1.0).abs() <= 1e-12,
        format!("f(0) = {f0}, f'(0) = {d0}"),
    ));

    let grid: Vec<f64> = (0..grid_size).map(|i| r * i as f64 / grid_size as f64).collect();
    let slopes: Vec<f64> = grid.iter().map(|&t| m.derivative(t)).collect();
    let first_flat = slopes.windows(2).position(|w| !(w[1] > w[0]));
    entries.push(entry(
        "h2_monotone",
        first_flat.is_none(),
        match first_flat {
            None => format!("f' strictly increasing on {grid_size} points"),
            Some(i) => format!("f' not increasing at t = {}", grid[i + 1]),
        },
    ));
    // midpoint convexity on consecutive, equally spaced triples
    let first_concave = slopes.windows(3).position(|w| {
        let mid = 0.5 * (w[0] + w[2]);
        w[1] > mid + 1e-12 * mid.abs().max(1.0)
    });
    entries.push(entry(
        "h2_convex",
        first_concave.is_none(),
        match first_concave {
            None => "f' midpoint convex on grid".to_string(),
            Some(i) => format!("f' midpoint convexity fails at t = {}", grid[i + 1]),
        },
    ));

    let sign_change = if f0 > 0.0 {
        find_bracket(|t| m.value(t), 0.0, r)
    } else {
        None
    };
    entries.push(entry(
        "h3",
        sign_change.is_some(),
        match sign_change {
            Some((_, t)) => format!("f({t}) = {} < 0", m.value(t)),
            None => "no t in (0, R) with f(t) < 0 found".to_string(),
        },
    ));

    let (gap, at) = derivative_consistency(m, grid_size);
    entries.push(entry(
        "fd_derivative",
        gap <= FD_REL_TOL,
        format!("max relative gap {gap:.3e} at t = {at}"),
    ));

    ValidationReport { grid_size, entries }
}
