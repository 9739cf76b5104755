//! Built-in test problems, one or more per majorant family.

use nalgebra::DVector;

use super::spec::{build_operator, Builtin, LoadedProblem, Monomial, OperatorFamily, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::{Norm, NormSpec};
use crate::majorant::Family;

/// `‖F'(x0)⁻¹F(x0)‖` in the given norm, used as the majorant seed `b`.
fn measured_seed(operator: &OperatorFamily, x0: &[f64], norm: &NormSpec) -> f64 {
    let map = build_operator(operator).expect("corpus operators are well formed");
    let x = DVector::from_column_slice(x0);
    let step = map.jacobian(&x).lu().solve(&map.residual(&x)).expect("corpus Jacobians are nonsingular");
    Norm::new(norm, x0.len()).expect("corpus norms are valid").norm(&step)
}

fn mono(coef: f64, powers: [u32; 3]) -> Monomial {
    Monomial {
        coef,
        powers: powers.to_vec(),
    }
}

/// Problem files for the built-in corpus.
pub fn corpus_specs() -> Vec<ProblemSpec> {
    let mut specs = Vec::new();

    // x² - 2 from 1.5; the quadratic majorant is attained exactly
    let sqrt2 = OperatorFamily::PolynomialSystem {
        equations: vec![vec![
            Monomial {
                coef: 1.0,
                powers: vec![2],
            },
            Monomial {
                coef: -2.0,
                powers: vec![0],
            },
        ]],
    };
    specs.push(ProblemSpec {
        name: "sqrt2".into(),
        majorant: Family::Quadratic {
            lipschitz: 2.0 / 3.0,
            b: measured_seed(&sqrt2, &[1.5], &NormSpec::Euclidean),
        },
        operator: sqrt2,
        x0: vec![1.5],
        domain_radius: None,
        norm: NormSpec::Euclidean,
    });

    // circle meets diagonal; F'(y) - F'(x) = 2 e1 (y - x)ᵀ so L = 2‖A0⁻¹e1‖
    let circle = OperatorFamily::CustomBuiltin {
        builtin: Builtin::CircleLine { radius: 1.0 },
    };
    let x0 = [0.75, 0.70];
    let a0 = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0 * x0[0], 2.0 * x0[1], 1.0, -1.0]);
    let col = a0.lu().solve(&DVector::from_vec(vec![1.0, 0.0])).expect("nonsingular");
    specs.push(ProblemSpec {
        name: "circle_line".into(),
        majorant: Family::Quadratic {
            lipschitz: 2.0 * col.norm(),
            b: measured_seed(&circle, &x0, &NormSpec::Euclidean),
        },
        operator: circle,
        x0: x0.to_vec(),
        domain_radius: None,
        norm: NormSpec::Euclidean,
    });

    // exp(x) - 1.1 from 0; gamma = sup (1/n!)^(1/(n-1)) = 1/2
    let exp = OperatorFamily::ExpAnalytic { targets: vec![1.1] };
    specs.push(ProblemSpec {
        name: "exp_analytic".into(),
        majorant: Family::Smale {
            gamma: 0.5,
            b: measured_seed(&exp, &[0.0], &NormSpec::Euclidean),
        },
        operator: exp,
        x0: vec![0.0],
        domain_radius: None,
        norm: NormSpec::Euclidean,
    });

    // g(x) = x - ln x, F = g', local norm of g''(x0) = 1/x0²
    let barrier = OperatorFamily::LogBarrier { weights: vec![1.0] };
    let metric = NormSpec::Metric {
        matrix: vec![vec![1.0 / (1.15 * 1.15)]],
    };
    specs.push(ProblemSpec {
        name: "log_barrier".into(),
        majorant: Family::SelfConcordant {
            b: measured_seed(&barrier, &[1.15], &metric),
        },
        operator: barrier,
        x0: vec![1.15],
        domain_radius: None,
        norm: metric,
    });

    // root (1.1, 0.9, 1.0); F'(x0) = 2I + P with ‖F'(x0)⁻¹‖ = 1/√3, so the
    // exact constant is 2/√3 ≈ 1.15470, stored rounded up
    let poly = OperatorFamily::PolynomialSystem {
        equations: vec![
            vec![mono(1.0, [2, 0, 0]), mono(1.0, [0, 1, 0]), mono(-2.11, [0, 0, 0])],
            vec![mono(1.0, [0, 2, 0]), mono(1.0, [0, 0, 1]), mono(-1.81, [0, 0, 0])],
            vec![mono(1.0, [0, 0, 2]), mono(1.0, [1, 0, 0]), mono(-2.1, [0, 0, 0])],
        ],
    };
    specs.push(ProblemSpec {
        name: "poly3".into(),
        majorant: Family::Quadratic {
            lipschitz: 1.1548,
            b: measured_seed(&poly, &[1.0, 1.0, 1.0], &NormSpec::Euclidean),
        },
        operator: poly,
        x0: vec![1.0, 1.0, 1.0],
        domain_radius: None,
        norm: NormSpec::Euclidean,
    });

    specs
}

/// All built-in problems, loaded through the same checks as problem files.
pub fn builtin_corpus() -> Vec<LoadedProblem> {
    corpus_specs()
        .into_iter()
        .map(|s| s.load().expect("built-in problems pass their load checks"))
        .collect()
}

/// Looks up one built-in problem by name.
pub fn builtin(name: &str) -> Result<LoadedProblem> {
    corpus_specs()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Schema(format!("no built-in problem named `{name}`")))?
        .load()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::{derive_certificate, validate_majorant, DEFAULT_GRID};
    use approx::assert_relative_eq;

    #[test]
    fn corpus_has_every_family_and_validates() {
        let corpus = builtin_corpus();
        assert!(corpus.len() >= 5);
        for c in &corpus {
            assert!(validate_majorant(&c.majorant, DEFAULT_GRID).passed(), "{}", c.spec.name);
        }
    }

    #[test]
    fn seeds_match_hand_values() {
        let b = |name: &str| builtin(name).unwrap().majorant.value(0.0);
        assert_eq!(b("sqrt2"), 1.0 / 12.0);
        assert_relative_eq!(b("log_barrier"), 0.15, max_relative = 1e-14);
        assert_relative_eq!(b("exp_analytic"), 0.1, max_relative = 1e-14);
    }

    #[test]
    fn exp_root_inside_error_ball() {
        let loaded = builtin("exp_analytic").unwrap();
        let cert = derive_certificate(&loaded.majorant, 0.0).unwrap();
        // smallest root of t/(1 - t/2) - 2t + b
        let b = loaded.majorant.value(0.0);
        let a = 1.0 + 0.5 * b;
        let closed = (a - (a * a - 4.0 * b).sqrt()) / 2.0;
        assert_relative_eq!(cert.t_star, closed, max_relative = 1e-10);
        assert_relative_eq!(cert.t_star, 0.105_923_634_6, max_relative = 1e-9);
        assert!(1.1f64.ln() <= cert.t_star);
    }

    #[test]
    fn log_barrier_domain_equals_majorant_radius() {
        let loaded = builtin("log_barrier").unwrap();
        assert_relative_eq!(loaded.problem.domain_radius(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn unknown_name() {
        assert!(builtin("nope").is_err());
    }
}
