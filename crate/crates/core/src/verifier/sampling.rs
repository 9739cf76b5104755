//! Seeded sample generators for the probes.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::majorant::{landmarks, MajorantFunction};
use crate::problem::OperatorProblem;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// A point `x` together with a radius `t ≥ ‖x - x0‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanachSample {
    pub x: DVector<f64>,
    pub t: f64,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform point of the ball `B(center, radius)` in the problem's norm.
fn ball_point(p: &OperatorProblem, rng: &mut ChaCha8Rng, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = p.dim();
    let mut dir = DVector::from_fn(n, |_, _| gaussian(rng));
    while dir.norm() == 0.0 {
        dir = DVector::from_fn(n, |_, _| gaussian(rng));
    }
    dir /= dir.norm();
    let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
    center + p.norm().from_euclidean(&(dir * r))
}

fn usable_radius(p: &OperatorProblem, m: &MajorantFunction) -> f64 {
    m.radius().min(p.domain_radius())
}

/// Points of `B(x0, 0.9 t̄)`. Half the samples carry `t = ‖x - x0‖`, the
/// rest a larger `t` drawn up to `0.9 t̄`.
pub fn banach_samples(p: &OperatorProblem, m: &MajorantFunction, count: usize, seed: u64) -> Result<Vec<BanachSample>> {
    let t_bar = landmarks(m)?.t_bar.min(p.domain_radius());
    let cap = 0.9 * t_bar;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = p.base_point();
    Ok((0..count)
        .map(|i| {
            let x = ball_point(p, &mut rng, x0, cap);
            let d = p.distance(&x, x0);
            let t = if i % 2 == 0 { d } else { d + (cap - d) * rng.gen::<f64>() };
            BanachSample { x, t }
        })
        .collect())
}

/// Pairs `(x, y)` with `‖x - x0‖ + ‖y - x‖ < 0.95 R`.
pub fn pair_samples(
    p: &OperatorProblem,
    m: &MajorantFunction,
    count: usize,
    seed: u64,
) -> Vec<(DVector<f64>, DVector<f64>)> {
    let reach = 0.95 * usable_radius(p, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = p.base_point();
    (0..count)
        .map(|_| {
            let x = ball_point(p, &mut rng, x0, reach);
            let left = reach - p.distance(&x, x0);
            let y = ball_point(p, &mut rng, &x, left.max(0.0));
            (x, y)
        })
        .collect()
}

/// Points of `B(x0, 0.95 R)`.
pub fn point_samples(p: &OperatorProblem, m: &MajorantFunction, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let reach = 0.95 * usable_radius(p, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| ball_point(p, &mut rng, p.base_point(), reach)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormSpec;
    use crate::problem::FnMap;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn plane(norm: NormSpec) -> OperatorProblem {
        let map = FnMap::new(2, |x| x.map(|v| v * v - 2.0), |x| DMatrix::from_diagonal(&(x * 2.0)));
        OperatorProblem::new("plane", Arc::new(map), DVector::from_vec(vec![1.5, 1.5]), f64::INFINITY, &norm).unwrap()
    }

    #[test]
    fn samples_respect_radii_and_are_reproducible() {
        let metric = NormSpec::Metric {
            matrix: vec![vec![4.0, 1.0], vec![1.0, 2.0]],
        };
        let p = plane(metric);
        let m = MajorantFunction::quadratic(1.0, 0.25).unwrap();
        let pts = point_samples(&p, &m, 300, 7);
        assert!(pts.iter().all(|y| p.distance(y, p.base_point()) < 0.95));
        assert_eq!(pts, point_samples(&p, &m, 300, 7));
        assert_ne!(pts, point_samples(&p, &m, 300, 8));
        for (x, y) in pair_samples(&p, &m, 300, 7) {
            assert!(p.distance(&x, p.base_point()) + p.distance(&y, &x) < 0.95 + 1e-12);
        }
        for s in banach_samples(&p, &m, 300, 7).unwrap() {
            assert!(p.distance(&s.x, p.base_point()) <= s.t + 1e-15);
            assert!(s.t < 0.9 * 1.0 + 1e-12);
        }
    }
}
