//! Restarted GMRES with Givens rotations, zero initial guess.
//!
//! The solver stops at the first inner iterate whose relative residual
//! `‖b - A u‖/‖b‖` is at most the requested tolerance, so it neither
//! over-solves nor under-solves the linear system.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: DVector<f64>,
    /// Total inner iterations (Arnoldi steps) across restarts.
    pub iterations: usize,
    /// True relative residual of `solution`.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `A u = b` for `A` given as a matrix-vector product.
pub fn gmres<A>(apply: A, rhs: &DVector<f64>, rel_tol: f64, restart: usize, max_iter: usize) -> GmresOutcome
where
    A: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = rhs.len();
    let b_norm = rhs.norm();
    let mut x = DVector::zeros(n);
    if b_norm == 0.0 {
        return GmresOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let restart = restart.clamp(1, n.max(1));
    let target = rel_tol * b_norm;
    let mut total = 0;
    let mut residual = rhs.clone();
    let mut res_norm = b_norm;

    while total < max_iter {
        if res_norm <= target {
            break;
        }
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(restart + 1);
        basis.push(&residual / res_norm);
        let mut hess = DMatrix::<f64>::zeros(restart + 1, restart);
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = DVector::<f64>::zeros(restart + 1);
        g[0] = res_norm;
        let mut used = 0;

        for j in 0..restart {
            if total >= max_iter {
                break;
            }
            let mut w = apply(&basis[j]);
            for (i, v) in basis.iter().enumerate() {
                let h = w.dot(v);
                hess[(i, j)] = h;
                w.axpy(-h, v, 1.0);
            }
            let h_next = w.norm();
            hess[(j + 1, j)] = h_next;

            for i in 0..j {
                let a = hess[(i, j)];
                let b = hess[(i + 1, j)];
                hess[(i, j)] = cs[i] * a + sn[i] * b;
                hess[(i + 1, j)] = -sn[i] * a + cs[i] * b;
            }
            let a = hess[(j, j)];
            let b = hess[(j + 1, j)];
            let r = a.hypot(b);
            cs[j] = if r == 0.0 { 1.0 } else { a / r };
            sn[j] = if r == 0.0 { 0.0 } else { b / r };
            hess[(j, j)] = r;
            hess[(j + 1, j)] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            total += 1;
            used = j + 1;
            let breakdown = h_next <= 1e-14 * r.abs().max(f64::MIN_POSITIVE);
            if g[j + 1].abs() <= target || breakdown {
                break;
            }
            basis.push(w / h_next);
        }

        // back substitution on the leading used x used triangle
        let mut y = DVector::<f64>::zeros(used);
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in (i + 1)..used {
                s -= hess[(i, k)] * y[k];
            }
            y[i] = s / hess[(i, i)];
        }
        for (i, yi) in y.iter().enumerate() {
            x.axpy(*yi, &basis[i], 1.0);
        }
        residual = rhs - apply(&x);
        let new_norm = residual.norm();
        let stalled = new_norm >= res_norm * (1.0 - 1e-14) && used > 0;
        res_norm = new_norm;
        if stalled && res_norm > target {
            break;
        }
    }

    GmresOutcome {
        relative_residual: res_norm / b_norm,
        converged: res_norm <= target,
        solution: x,
        iterations: total,
    }
}
