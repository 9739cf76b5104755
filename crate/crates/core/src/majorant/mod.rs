//! Scalar majorant functions and the convergence constants derived from them.
//!
//! A majorant `f: [0, R) -> R` satisfies
//!
//! * **h1** `f(0) > 0`, `f'(0) = -1`;
//! * **h2** `f'` strictly increasing and convex;
//! * **h3** `f(t) < 0` for some `t` in `(0, R)`.
//!
//! Three closed-form families are provided ([`Family::Quadratic`] for
//! Lipschitz Jacobians, [`Family::Smale`] for analytic maps and
//! [`Family::SelfConcordant`] for Newton on self-concordant functions); any
//! other convex model can be supplied through [`MajorantFunction::custom`].

mod certificate;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use certificate::{derive_certificate, landmarks, Certificate, Landmarks};
pub use validate::{derivative_consistency, validate_majorant, CheckEntry, ValidationReport, DEFAULT_GRID};

/// `3 - 2√2`, the admissible bound on `γb` for the analytic families.
pub const ALPHA_BOUND: f64 = 0.171_572_875_253_809_9;

/// Family tag recorded on every majorant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `f(t) = L t²/2 - t + b` on `[0, 1/L)`.
    Quadratic {
        #[serde(rename = "L")]
        lipschitz: f64,
        b: f64,
    },
    /// `f(t) = t/(1 - γt) - 2t + b` on `[0, 1/γ)`.
    Smale { gamma: f64, b: f64 },
    /// `f(t) = t/(1 - t) - 2t + b` on `[0, 1)`.
    SelfConcordant { b: f64 },
    Custom,
    /// Perturbed-start majorant built by [`shift_majorant`].
    Shifted { base: Box<Family>, rho: f64 },
}

/// Shared scalar evaluator used by custom majorants.
pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Model {
    Quadratic { lipschitz: f64, b: f64 },
    Analytic { gamma: f64, b: f64 },
    Custom {
        value: ScalarMap,
        derivative: ScalarMap,
        left_second: Option<ScalarMap>,
    },
    Shifted {
        base: Arc<MajorantFunction>,
        rho: f64,
        // |f'(rho)|
        scale: f64,
    },
}

/// A scalar convex majorant with its first derivative and the left
/// derivative of `f'`.
///
/// The evaluators do not check the domain; use
/// [`scalar_linearization_error`] or the certificate routines for checked
/// access.
#[derive(Clone)]
pub struct MajorantFunction {
    radius: f64,
    family: Family,
    model: Model,
}

impl fmt::Debug for MajorantFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MajorantFunction")
            .field("radius", &self.radius)
            .field("family", &self.family)
            .finish()
    }
}

impl MajorantFunction {
    pub fn quadratic(lipschitz: f64, b: f64) -> Result<Self> {
        make_canonical(Family::Quadratic { lipschitz, b })
    }

    pub fn smale(gamma: f64, b: f64) -> Result<Self> {
        make_canonical(Family::Smale { gamma, b })
    }

    pub fn self_concordant(b: f64) -> Result<Self> {
        make_canonical(Family::SelfConcordant { b })
    }

    /// A user-supplied majorant. When `left_second` is `None`, `D⁻f'` is
    /// approximated by a central difference of `derivative` with step
    /// `1e-6·max(1, t)`.
    ///
    /// No hypothesis is checked here; run [`validate_majorant`].
    pub fn custom<V, D>(radius: f64, value: V, derivative: D, left_second: Option<ScalarMap>) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            radius,
            family: Family::Custom,
            model: Model::Custom {
                value: Arc::new(value),
                derivative: Arc::new(derivative),
                left_second,
            },
        }
    }

    /// Domain radius `R`; the majorant lives on `[0, R)`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.model {
            Model::Quadratic { lipschitz, b } => 0.5 * lipschitz * t * t - t + b,
            Model::Analytic { gamma, b } => t / (1.0 - gamma * t) - 2.0 * t + b,
            Model::Custom { value, .. } => value(t),
            Model::Shifted { base, rho, scale } => (base.value(t + rho) + 2.0 * rho) / scale,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match &self.model {
            Model::Quadratic { lipschitz, .. } => lipschitz * t - 1.0,
            Model::Analytic { gamma, .. } => {
                let d = 1.0 - gamma * t;
                1.0 / (d * d) - 2.0
            }
            Model::Custom { derivative, .. } => derivative(t),
            Model::Shifted { base, rho, scale } => base.derivative(t + rho) / scale,
        }
    }

    /// Left derivative of `f'` (equal to `f''` where it exists).
    pub fn left_second(&self, t: f64) -> f64 {
        match &self.model {
            Model::Quadratic { lipschitz, .. } => *lipschitz,
            Model::Analytic { gamma, .. } => {
                let d = 1.0 - gamma * t;
                2.0 * gamma / (d * d * d)
            }
            Model::Custom {
                derivative,
                left_second,
                ..
            } => match left_second {
                Some(g) => g(t),
                None => {
                    let h = 1e-6 * t.abs().max(1.0);
                    (derivative(t + h) - derivative(t - h)) / (2.0 * h)
                }
            },
            Model::Shifted { base, rho, scale } => base.left_second(t + rho) / scale,
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t < self.radius {
            Ok(())
        } else {
            Err(Error::Domain {
                value: t,
                radius: self.radius,
            })
        }
    }
}

fn reject(violated: &'static str, detail: String) -> Error {
    Error::Parameter { violated, detail }
}

/// Builds one of the closed-form majorant families.
///
/// Admissible parameters: quadratic needs `L > 0`, `b > 0`, `bL < 1/2`;
/// Smale needs `γ > 0`, `b > 0`, `γb < 3 - 2√2`; self-concordant needs
/// `0 < b < 3 - 2√2`.
pub fn make_canonical(family: Family) -> Result<MajorantFunction> {
    match family {
        Family::Quadratic { lipschitz, b } => {
            if !(lipschitz > 0.0 && lipschitz.is_finite()) {
                return Err(reject("L > 0", format!("L = {lipschitz}")));
            }
            if !(b > 0.0) {
                return Err(reject("b > 0", format!("b = {b}")));
            }
            if !(b * lipschitz < 0.5) {
                return Err(reject("bL < 1/2", format!("bL = {}", b * lipschitz)));
            }
            Ok(MajorantFunction {
                radius: 1.0 / lipschitz,
                family,
                model: Model::Quadratic { lipschitz, b },
            })
        }
        Family::Smale { gamma, b } => {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(reject("gamma > 0", format!("gamma = {gamma}")));
            }
            if !(b > 0.0) {
                return Err(reject("b > 0", format!("b = {b}")));
            }
            if !(gamma * b < ALPHA_BOUND) {
                return Err(reject(
                    "gamma*b < 3-2*sqrt(2)",
                    format!("gamma*b = {}", gamma * b),
                ));
            }
            Ok(MajorantFunction {
                radius: 1.0 / gamma,
                family,
                model: Model::Analytic { gamma, b },
            })
        }
        Family::SelfConcordant { b } => {
            if !(b > 0.0) {
                return Err(reject("b > 0", format!("b = {b}")));
            }
            if !(b < ALPHA_BOUND) {
                return Err(reject("b < 3-2*sqrt(2)", format!("b = {b}")));
            }
            Ok(MajorantFunction {
                radius: 1.0,
                family,
                model: Model::Analytic { gamma: 1.0, b },
            })
        }
        Family::Custom | Family::Shifted { .. } => Err(reject(
            "canonical family",
            "custom and shifted majorants have no closed form".into(),
        )),
    }
}

/// Majorant for a perturbed start point `z0` with `‖z0 - x0‖ ≤ ρ`:
///
/// `g(t) = (f(t + ρ) + 2ρ) / |f'(ρ)|` on `[0, R - ρ)`,
///
/// so that `g'(0) = -1` exactly. For `ρ = 0` the input is returned unchanged.
pub fn shift_majorant(m: &MajorantFunction, rho: f64) -> Result<MajorantFunction> {
    let marks = landmarks(m)?;
    if !(rho >= 0.0 && rho < 0.5 * marks.beta) {
        return Err(Error::PerturbationTooLarge {
            rho,
            half_beta: 0.5 * marks.beta,
        });
    }
    if rho == 0.0 {
        return Ok(m.clone());
    }
    let slope = m.derivative(rho);
    if !(slope < 0.0) {
        return Err(Error::NonNegativeSlope { t: rho, slope });
    }
    Ok(MajorantFunction {
        radius: m.radius - rho,
        family: Family::Shifted {
            base: Box::new(m.family.clone()),
            rho,
        },
        model: Model::Shifted {
            base: Arc::new(m.clone()),
            rho,
            scale: -slope,
        },
    })
}

/// `e_f(v, t) = f(v) - [f(t) + f'(t)(v - t)]`, nonnegative for `v ≥ t` by
/// convexity.
pub fn scalar_linearization_error(m: &MajorantFunction, v: f64, t: f64) -> Result<f64> {
    m.check_domain(v)?;
    m.check_domain(t)?;
    Ok(linearization_error(m, v, t))
}

pub(crate) fn linearization_error(m: &MajorantFunction, v: f64, t: f64) -> f64 {
    m.value(v) - (m.value(t) + m.derivative(t) * (v - t))
}
