//! Bracketing scalar root finding used by certificate derivation.
//!
//! Only bisection is used: the functions involved (f, f', and the tangency
//! function f(t) - t f'(t)) are monotone on the intervals where we search,
//! but can be very flat, where derivative-based updates misbehave.

/// Guaranteed absolute accuracy on the abscissa. Bisection continues past
/// this until the bracket stops shrinking, so derived constants carry no
/// more than rounding error.
pub const ABS_TOL: f64 = 1e-12;

/// Number of points in the first bracket scan.
pub const SCAN_POINTS: usize = 64;

/// Each failed scan multiplies the point count by this factor.
pub const SCAN_REFINE: usize = 4;

/// Number of refinements tried before giving up.
pub const SCAN_ATTEMPTS: usize = 4;

/// Bisection on `[lo, hi]` where `g(lo)` and `g(hi)` have opposite signs
/// (or one of them is zero). Stops when the bracket stops shrinking in
/// floating point.
///
/// Returns `None` when the endpoint values do not bracket a root.
pub fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Some(lo);
    }
    if g_hi == 0.0 {
        return Some(hi);
    }
    if g_lo.is_nan() || g_hi.is_nan() || g_lo.signum() == g_hi.signum() {
        return None;
    }
    // 200 halvings exhaust any f64 interval.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Some(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Scan points on `[lo, hi)`: a uniform grid merged with geometric grids
/// clustering at both ends, so that roots very close to either endpoint
/// are still separated from their neighbours.
pub fn scan_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let width = hi - lo;
    let mut grid = Vec::with_capacity(3 * points);
    for i in 0..points {
        grid.push(lo + width * i as f64 / points as f64);
    }
    // ratio so that `points` geometric steps go from width/2 down to 1e-12 width
    let ratio = (1e-12f64 / 0.5).powf(1.0 / points as f64);
    let mut frac = 0.5;
    for _ in 0..points {
        grid.push(lo + width * frac);
        grid.push(hi - width * frac);
        frac *= ratio;
    }
    grid.retain(|t| *t >= lo && *t < hi);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// Finds the first adjacent pair of grid points on `[lo, hi)` where `g`
/// changes sign from the sign of `g(lo)`. The grid is refined
/// ([`SCAN_REFINE`]-fold) up to [`SCAN_ATTEMPTS`] times.
pub fn find_bracket<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let start_sign = g(lo).signum();
    let mut points = SCAN_POINTS;
    for _ in 0..=SCAN_ATTEMPTS {
        let grid = scan_grid(lo, hi, points);
        let mut prev = grid[0];
        for &t in &grid[1..] {
            let v = g(t);
            if v.is_finite() && v.signum() != start_sign {
                return Some((prev, t));
            }
            prev = t;
        }
        points *= SCAN_REFINE;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0).is_none());
    }

    #[test]
    fn bisect_accepts_infinite_endpoint() {
        // 1/(1-t) - 3 -> +inf at t = 1
        let root = bisect(|t| 1.0 / (1.0 - t) - 3.0, 0.0, 1.0).unwrap();
        assert!((root - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_near_left_endpoint() {
        let (a, b) = find_bracket(|t| t - 1e-9, 0.0, 1.0).unwrap();
        assert!(a <= 1e-9 && b >= 1e-9);
    }

    #[test]
    fn bracket_two_close_roots() {
        // negative only on (0.5005, 0.5015); needs two refinements
        let g = |t: f64| (t - 0.5005) * (t - 0.5015);
        let (a, b) = find_bracket(g, 0.0, 1.0).unwrap();
        assert!(a <= 0.5005 && b > 0.5005 && b < 0.5015);
    }

    #[test]
    fn bracket_absent() {
        assert!(find_bracket(|t| 1.0 + t, 0.0, 1.0).is_none());
    }
}
