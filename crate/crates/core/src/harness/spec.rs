//! On-disk problem description and loading.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::NormSpec;
use crate::majorant::{make_canonical, Family, MajorantFunction};
use crate::problem::{FnMap, NonlinearMap, OperatorProblem};
use crate::verifier::pair_samples;

/// Pairs drawn for the majorant-constant spot-check.
pub const SPOT_CHECK_PAIRS: usize = 100;
/// Seed for the spot-check pairs.
pub const SPOT_CHECK_SEED: u64 = 1729;
/// Relative excess over the declared constant that still passes.
pub const SPOT_CHECK_REL: f64 = 1e-6;
/// Relative excess of `‖F'(x0)⁻¹F(x0)‖` over `f(0)` that still passes.
pub const SEED_CHECK_REL: f64 = 1e-9;

/// `coef · ∏ x_j^{powers[j]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Builtin {
    /// `F(x, y) = (x² + y² - r², x - y)`.
    CircleLine { radius: f64 },
}

/// Operator families selectable from a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters", rename_all = "snake_case")]
pub enum OperatorFamily {
    /// `F_i(x) = Σ_m coef · ∏ x_j^{p_j}`, one monomial list per equation.
    PolynomialSystem { equations: Vec<Vec<Monomial>> },
    /// `F_i(x) = exp(x_i) - c_i`.
    ExpAnalytic { targets: Vec<f64> },
    /// Gradient of `Σ w_i x_i - ln x_i`: `F_i(x) = w_i - 1/x_i`, for `x > 0`.
    LogBarrier { weights: Vec<f64> },
    CustomBuiltin { builtin: Builtin },
}

fn euclidean() -> NormSpec {
    NormSpec::Euclidean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(flatten)]
    pub operator: OperatorFamily,
    pub x0: Vec<f64>,
    pub majorant: Family,
    /// Radius of the ball around `x0` on which the operator may be
    /// evaluated. Omitted means the operator's natural domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_radius: Option<f64>,
    #[serde(default = "euclidean")]
    pub norm: NormSpec,
}

impl OperatorFamily {
    fn dim(&self) -> usize {
        match self {
            OperatorFamily::PolynomialSystem { equations } => equations.len(),
            OperatorFamily::ExpAnalytic { targets } => targets.len(),
            OperatorFamily::LogBarrier { weights } => weights.len(),
            OperatorFamily::CustomBuiltin { builtin: Builtin::CircleLine { .. } } => 2,
        }
    }

    fn build(&self) -> Result<Arc<dyn NonlinearMap>> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Schema("operator has no equations".into()));
        }
        Ok(match self.clone() {
            OperatorFamily::PolynomialSystem { equations } => {
                for (i, eq) in equations.iter().enumerate() {
                    if let Some(bad) = eq.iter().find(|mono| mono.powers.len() != n) {
                        return Err(Error::Schema(format!(
                            "equation {i}: monomial has {} powers, expected {n}",
                            bad.powers.len()
                        )));
                    }
                }
                let eqs = Arc::new(equations);
                let eqs_j = Arc::clone(&eqs);
                Arc::new(FnMap::new(
                    n,
                    move |x| DVector::from_fn(n, |i, _| eqs[i].iter().map(|mono| monomial(mono, x, None)).sum()),
                    move |x| {
                        DMatrix::from_fn(n, n, |i, j| eqs_j[i].iter().map(|mono| monomial(mono, x, Some(j))).sum())
                    },
                ))
            }
            OperatorFamily::ExpAnalytic { targets } => {
                let c = DVector::from_vec(targets);
                Arc::new(FnMap::new(
                    n,
                    move |x| x.map(f64::exp) - &c,
                    |x| DMatrix::from_diagonal(&x.map(f64::exp)),
                ))
            }
            OperatorFamily::LogBarrier { weights } => {
                let w = DVector::from_vec(weights);
                Arc::new(FnMap::new(
                    n,
                    move |x| &w - x.map(|v| 1.0 / v),
                    |x| DMatrix::from_diagonal(&x.map(|v| 1.0 / (v * v))),
                ))
            }
            OperatorFamily::CustomBuiltin {
                builtin: Builtin::CircleLine { radius },
            } => Arc::new(FnMap::new(
                2,
                move |v| DVector::from_vec(vec![v[0] * v[0] + v[1] * v[1] - radius * radius, v[0] - v[1]]),
                |v| DMatrix::from_row_slice(2, 2, &[2.0 * v[0], 2.0 * v[1], 1.0, -1.0]),
            )),
        })
    }

    /// Largest radius around `x0` (in the given norm) inside the operator's
    /// natural domain.
    fn natural_radius(&self, x0: &[f64], norm: &NormSpec) -> Result<f64> {
        match self {
            OperatorFamily::LogBarrier { .. } => {
                if x0.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Schema("log_barrier needs x0 > 0".into()));
                }
                let n = x0.len();
                // distance from x0 to {x_i = 0} is x0_i / sqrt((M⁻¹)_ii)
                let inv = match norm {
                    NormSpec::Euclidean => DMatrix::identity(n, n),
                    NormSpec::Metric { matrix } => DMatrix::from_fn(n, n, |i, j| matrix[i][j])
                        .try_inverse()
                        .ok_or_else(|| Error::Schema("metric is singular".into()))?,
                };
                Ok((0..n).map(|i| x0[i] / inv[(i, i)].sqrt()).fold(f64::INFINITY, f64::min))
            }
            _ => Ok(f64::INFINITY),
        }
    }
}

pub(crate) fn build_operator(op: &OperatorFamily) -> Result<Arc<dyn NonlinearMap>> {
    op.build()
}

fn monomial(mono: &Monomial, x: &DVector<f64>, diff: Option<usize>) -> f64 {
    let mut value = mono.coef;
    for (j, &p) in mono.powers.iter().enumerate() {
        let p = p as i32;
        if Some(j) == diff {
            if p == 0 {
                return 0.0;
            }
            value *= p as f64 * x[j].powi(p - 1);
        } else {
            value *= x[j].powi(p);
        }
    }
    value
}

/// A loaded problem and its majorant.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub spec: ProblemSpec,
    pub problem: OperatorProblem,
    pub majorant: MajorantFunction,
    /// Largest measured ratio of `‖F'(x0)⁻¹(F'(y) - F'(x))‖` to
    /// `f'(‖y-x‖ + ‖x-x0‖) - f'(‖x-x0‖)` over the spot-check pairs.
    pub spot_check_ratio: f64,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds the operator and majorant and runs the load-time checks:
    /// canonical parameter ranges, domain radius, `‖F'(x0)⁻¹F(x0)‖ ≤ f(0)`,
    /// and the derivative-increment spot-check on seeded pairs.
    pub fn load(&self) -> Result<LoadedProblem> {
        let n = self.operator.dim();
        if self.x0.len() != n {
            return Err(Error::Schema(format!("x0 has {} entries, operator has dimension {n}", self.x0.len())));
        }
        let map = self.operator.build()?;
        let natural = self.operator.natural_radius(&self.x0, &self.norm)?;
        let domain = match self.domain_radius {
            Some(d) if !(d > 0.0) => return Err(Error::Schema(format!("domain_radius must be positive, got {d}"))),
            Some(d) => d.min(natural),
            None => natural,
        };
        let problem = OperatorProblem::new(&self.name, map, DVector::from_column_slice(&self.x0), domain, &self.norm)?;
        let majorant = match &self.majorant {
            Family::Custom | Family::Shifted { .. } => {
                return Err(Error::Schema("majorant family must be quadratic, smale or self_concordant".into()))
            }
            family => make_canonical(family.clone())?,
        };
        if domain < majorant.radius() * (1.0 - 1e-12) {
            return Err(Error::Schema(format!(
                "operator domain radius {domain} is smaller than the majorant radius {}",
                majorant.radius()
            )));
        }

        let x0 = problem.base_point();
        let base = problem.factor_at(x0)?;
        let seed_residual = problem.norm().norm(&base.apply(&problem.residual(x0)));
        let b = majorant.value(0.0);
        if seed_residual > b * (1.0 + SEED_CHECK_REL) {
            return Err(Error::SpotCheck {
                field: "b",
                measured: seed_residual,
                declared: b,
            });
        }

        let mut worst = 0.0f64;
        for (x, y) in pair_samples(&problem, &majorant, SPOT_CHECK_PAIRS, SPOT_CHECK_SEED) {
            let t = problem.distance(&x, x0);
            let s = problem.distance(&y, &x);
            let bound = majorant.derivative(t + s) - majorant.derivative(t);
            if !(bound > 0.0) {
                continue;
            }
            let diff = base.apply_matrix(&(problem.jacobian(&y) - problem.jacobian(&x)));
            let ratio = problem.norm().operator_norm(&diff) / bound;
            if !(ratio <= worst) {
                worst = ratio;
            }
        }
        if !(worst <= 1.0 + SPOT_CHECK_REL) {
            let (field, declared) = match self.majorant {
                Family::Quadratic { lipschitz, .. } => ("L", lipschitz),
                Family::Smale { gamma, .. } => ("gamma", gamma),
                _ => ("self_concordance", 1.0),
            };
            return Err(Error::SpotCheck {
                field,
                measured: worst * declared,
                declared,
            });
        }

        Ok(LoadedProblem {
            spec: self.clone(),
            problem,
            majorant,
            spot_check_ratio: worst,
        })
    }
}

/// Reads and loads a JSON problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    let text = std::fs::read_to_string(path)?;
    ProblemSpec::from_json(&text)?.load()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: &str = r#"{
        "name": "sqrt2",
        "family": "polynomial_system",
        "parameters": {"equations": [[{"coef": 1.0, "powers": [2]}, {"coef": -2.0, "powers": [0]}]]},
        "x0": [1.5],
        "majorant": {"family": "quadratic", "L": 0.6666666666666666, "b": 0.08333333333333333}
    }"#;

    #[test]
    fn loads_sqrt2() {
        let loaded = ProblemSpec::from_json(SQRT2).unwrap().load().unwrap();
        assert_eq!(loaded.problem.dim(), 1);
        assert_eq!(loaded.problem.norm().spec(), &NormSpec::Euclidean);
        let r = loaded.problem.residual(&DVector::from_element(1, 3.0));
        assert_eq!(r[0], 7.0);
        assert!(loaded.spot_check_ratio <= 1.0 + 1e-12);
        assert!(loaded.spot_check_ratio > 0.999);
    }

    #[test]
    fn rejects_large_alpha() {
        let text = SQRT2.replace("0.6666666666666666", "6.0");
        let err = ProblemSpec::from_json(&text).unwrap().load().unwrap_err();
        assert!(err.to_string().contains("bL < 1/2"), "{err}");
    }

    #[test]
    fn rejects_understated_lipschitz() {
        let text = SQRT2.replace("0.6666666666666666", "0.6");
        match ProblemSpec::from_json(&text).unwrap().load().unwrap_err() {
            Error::SpotCheck { field, measured, declared } => {
                assert_eq!(field, "L");
                assert_eq!(declared, 0.6);
                assert!((measured - 2.0 / 3.0).abs() < 1e-9, "{measured}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_understated_seed() {
        let text = SQRT2.replace("0.08333333333333333", "0.08");
        match ProblemSpec::from_json(&text).unwrap().load().unwrap_err() {
            Error::SpotCheck { field, .. } => assert_eq!(field, "b"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(ProblemSpec::from_json("{\"name\": 3}"), Err(Error::Schema(_))));
        let text = SQRT2.replace("[1.5]", "[1.5, 2.0]");
        assert!(matches!(ProblemSpec::from_json(&text).unwrap().load(), Err(Error::Schema(_))));
        let text = SQRT2.replace("\"powers\": [2]", "\"powers\": [2, 1]");
        assert!(matches!(ProblemSpec::from_json(&text).unwrap().load(), Err(Error::Schema(_))));
    }

    #[test]
    fn polynomial_jacobian_matches_fd() {
        let eq = |c: &[(f64, [u32; 2])]| {
            c.iter()
                .map(|(coef, p)| Monomial {
                    coef: *coef,
                    powers: p.to_vec(),
                })
                .collect::<Vec<_>>()
        };
        let fam = OperatorFamily::PolynomialSystem {
            equations: vec![eq(&[(1.0, [3, 1]), (-2.0, [0, 2])]), eq(&[(0.5, [1, 0]), (1.0, [0, 0])])],
        };
        let map = fam.build().unwrap();
        let p = OperatorProblem::new("poly", map, DVector::from_vec(vec![0.7, -1.3]), 1.0, &NormSpec::Euclidean).unwrap();
        assert!(p.fd_jacobian_gap(&DVector::from_vec(vec![1.1, 0.4])) < 1e-8);
    }
}
