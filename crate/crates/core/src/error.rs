use thiserror::Error;

/// Errors raised by certificate derivation, the solver and the problem harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A canonical majorant was requested outside its admissible parameter set.
    #[error("majorant parameters rejected: {violated} violated ({detail})")]
    Parameter { violated: &'static str, detail: String },

    #[error("perturbation radius too large: rho = {rho} but beta/2 = {half_beta}")]
    PerturbationTooLarge { rho: f64, half_beta: f64 },

    #[error("hypothesis h3 not numerically verifiable: {0}")]
    Unbracketed(String),

    #[error("argument outside the majorant domain [0, {radius}): {value}")]
    Domain { value: f64, radius: f64 },

    #[error("left the negative-slope region: f'({t}) = {slope} >= 0")]
    NonNegativeSlope { t: f64, slope: f64 },

    #[error("tolerance {theta} exceeds the admissible maximum {theta_max}")]
    Tolerance { theta: f64, theta_max: f64 },

    #[error("invalid operator problem: {0}")]
    Problem(String),

    #[error("singular Jacobian at step {step}: reciprocal condition {rcond:e}")]
    SingularJacobian { step: usize, rcond: f64 },

    #[error("inner solver stagnated after {iterations} iterations (best relative residual {best:e}, target {target:e})")]
    InnerStagnation {
        iterations: usize,
        best: f64,
        target: f64,
    },

    #[error("envelope violated at step {step}: {bound} (measured {measured:e}, bound {limit:e})")]
    Envelope {
        step: usize,
        bound: &'static str,
        measured: f64,
        limit: f64,
    },

    #[error("non-finite operator evaluation at step {step}")]
    NonFinite { step: usize },

    #[error("trace/certificate mismatch: {0}")]
    Provenance(String),

    #[error("problem file: {0}")]
    Schema(String),

    #[error("majorant constant spot-check failed for `{field}`: measured {measured:e}, declared {declared:e}")]
    SpotCheck {
        field: &'static str,
        measured: f64,
        declared: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
