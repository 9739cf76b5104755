use serde::{Deserialize, Serialize};

use super::MajorantFunction;
use crate::error::{Error, Result};
use crate::roots::{bisect, find_bracket};

/// Landmarks of a majorant that do not depend on the perturbation radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    /// `β = sup -f` on `[0, R)`, attained as `t -> t̄`.
    pub beta: f64,
    /// Smallest root of `f`.
    pub t_star: f64,
    /// `sup{t : f(t) < 0}`; the second root of `f` when there is one, else `R`.
    pub tau_bar: f64,
    /// `sup{t : f'(t) < 0}`; the root of `f'` when there is one, else `R`.
    pub t_bar: f64,
}

/// Convergence constants for a majorant and a perturbation radius `ρ`.
///
/// `kappa`, `lambda` and `theta_max` are the constants of the shifted
/// majorant `g` (see [`super::shift_majorant`]); in particular `lambda` is a
/// distance measured from the perturbed start point. The remaining landmarks
/// belong to the unshifted majorant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rho: f64,
    pub beta: f64,
    pub t_star: f64,
    pub tau_bar: f64,
    pub t_bar: f64,
    pub kappa: f64,
    pub lambda: f64,
    /// `Θ = κ/(2 - κ)`, the largest admissible relative residual tolerance.
    pub theta_max: f64,
    /// `κ/(4 + κ)`; below this tolerance the iteration is Q-linear.
    pub qlinear_threshold: f64,
    /// Domain radius of the unshifted majorant.
    pub radius: f64,
    /// `|f'(ρ)|`.
    pub slope_at_rho: f64,
}

impl Certificate {
    /// Hypothesis h4: `λ_ρ < R - ρ`, needed for the composite contraction bound.
    pub fn h4_holds(&self) -> bool {
        self.lambda < self.radius - self.rho
    }

    /// Q-linear contraction factor `(1+θ)/2 + 2θ/κ`.
    pub fn qlinear_factor(&self, theta: f64) -> f64 {
        0.5 * (1.0 + theta) + 2.0 * theta / self.kappa
    }

    /// Named fields in a fixed order, for serialization.
    pub fn fields(&self) -> [(&'static str, f64); 11] {
        [
            ("rho", self.rho),
            ("beta", self.beta),
            ("t_star", self.t_star),
            ("tau_bar", self.tau_bar),
            ("t_bar", self.t_bar),
            ("kappa", self.kappa),
            ("lambda", self.lambda),
            ("theta_max", self.theta_max),
            ("qlinear_threshold", self.qlinear_threshold),
            ("radius", self.radius),
            ("slope_at_rho", self.slope_at_rho),
        ]
    }
}

// Right end of the domain used as a bracket endpoint, with the value there.
// Falls back to a point just inside `R` when `g(R)` is undefined; a NaN
// value in the result means the end is not usable and a scan is needed.
fn end_point<G: Fn(f64) -> f64>(g: &G, radius: f64) -> (f64, f64) {
    let v = g(radius);
    if v.is_nan() {
        let t = radius * (1.0 - 1e-12);
        (t, g(t))
    } else {
        (radius, v)
    }
}

fn end_value<G: Fn(f64) -> f64>(g: &G, radius: f64) -> f64 {
    end_point(g, radius).1
}

/// Root of an increasing function on `[0, R)` that is negative at 0, or `R`
/// when it stays negative.
fn increasing_root<G: Fn(f64) -> f64>(g: G, lo: f64, radius: f64) -> Result<f64> {
    let (t_end, end) = end_point(&g, radius);
    if end.is_nan() {
        return match find_bracket(&g, lo, radius) {
            Some((a, b)) => bisect(&g, a, b)
                .ok_or_else(|| Error::Unbracketed("bracket lost during bisection".into())),
            None => Ok(radius),
        };
    }
    if end < 0.0 {
        return Ok(radius);
    }
    bisect(&g, lo, t_end).ok_or_else(|| Error::Unbracketed("no sign change of f'".into()))
}

/// β, t*, τ̄ and t̄ of a majorant.
pub fn landmarks(m: &MajorantFunction) -> Result<Landmarks> {
    let radius = m.radius();
    let f0 = m.value(0.0);
    if !(f0 > 0.0) {
        return Err(Error::Unbracketed(format!("f(0) = {f0} is not positive")));
    }
    let t_bar = increasing_root(|t| m.derivative(t), 0.0, radius)?;
    let f_at_t_bar = if t_bar < radius {
        m.value(t_bar)
    } else {
        end_value(&|t| m.value(t), radius)
    };
    let beta = -f_at_t_bar;
    if !(beta > 0.0) {
        return Err(Error::Unbracketed(format!(
            "f stays positive on [0, R): inf f = {f_at_t_bar}"
        )));
    }
    let t_star = bisect(
        |t| if t >= t_bar { f_at_t_bar } else { m.value(t) },
        0.0,
        t_bar,
    )
    .ok_or_else(|| Error::Unbracketed("no sign change of f on [0, t_bar]".into()))?;

    let tau_bar = if t_bar < radius {
        let (t_end, end) = end_point(&|t| m.value(t), radius);
        if end > 0.0 {
            bisect(|t| m.value(t), t_bar, t_end)
                .ok_or_else(|| Error::Unbracketed("second root of f".into()))?
        } else {
            radius
        }
    } else {
        radius
    };
    Ok(Landmarks {
        beta,
        t_star,
        tau_bar,
        t_bar,
    })
}

/// Computes every constant of the convergence theorem for radius `ρ`.
///
/// `κ_ρ = sup_{ρ<t<R} -(f(t) + 2ρ) / (|f'(ρ)| (t - ρ))` is the slope of the
/// supporting line from `(ρ, -2ρ)`. The supremum is attained at the
/// tangency point `t_c`, the unique root of the decreasing function
/// `h(t) = f(t) + 2ρ - (t - ρ) f'(t)`, and then `κ_ρ = -f'(t_c)/|f'(ρ)|`
/// and `λ_ρ = t_c - ρ`.
pub fn derive_certificate(m: &MajorantFunction, rho: f64) -> Result<Certificate> {
    let marks = landmarks(m)?;
    if !(rho >= 0.0 && rho < 0.5 * marks.beta) {
        return Err(Error::PerturbationTooLarge {
            rho,
            half_beta: 0.5 * marks.beta,
        });
    }
    let radius = m.radius();
    let slope = -m.derivative(rho);
    if !(slope > 0.0) {
        return Err(Error::NonNegativeSlope {
            t: rho,
            slope: -slope,
        });
    }
    let tangency = |t: f64| m.value(t) + 2.0 * rho - (t - rho) * m.derivative(t);
    // h(t̄) = -β + 2ρ < 0, so the root lies in (ρ, t̄) when t̄ is interior.
    let hi = marks.t_bar;
    let h_hi = if hi < radius {
        tangency(hi)
    } else {
        end_value(&tangency, radius)
    };
    let (kappa, lambda) = if h_hi < 0.0 {
        let t_c = bisect(
            |t| if t >= hi { h_hi } else { tangency(t) },
            rho,
            hi,
        )
        .ok_or_else(|| Error::Unbracketed("tangency point".into()))?;
        (-m.derivative(t_c) / slope, t_c - rho)
    } else {
        // supremum approached at the boundary
        let end = end_value(&|t| m.value(t), radius);
        ((-(end + 2.0 * rho) / (slope * (radius - rho))), radius - rho)
    };
    Ok(Certificate {
        rho,
        beta: marks.beta,
        t_star: marks.t_star,
        tau_bar: marks.tau_bar,
        t_bar: marks.t_bar,
        kappa,
        lambda,
        theta_max: kappa / (2.0 - kappa),
        qlinear_threshold: kappa / (4.0 + kappa),
        radius,
        slope_at_rho: slope,
    })
}
