//! Jacobi-preconditioned conjugate gradients for symmetric positive definite
//! operators.

use crate::error::{Error, Result};

pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub residual_inf: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves `A x = b` starting from the contents of `x`. Stops when the true
/// residual satisfies `‖b - A x‖_∞ ≤ threshold`.
pub(crate) fn solve(
    apply: impl Fn(&[f64], &mut [f64]),
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    threshold: f64,
    max_iterations: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut iterations = 0;

    // Outer loop restarts from the true residual when the recursively
    // updated one has drifted below the threshold on its own.
    loop {
        apply(x, &mut ax);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let true_res = inf_norm(&r);
        if true_res <= threshold {
            return Ok(CgOutcome {
                iterations,
                residual_inf: true_res,
            });
        }
        if iterations >= max_iterations {
            return Err(Error::LinearSolve {
                iterations,
                residual: true_res,
            });
        }

        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);

        while iterations < max_iterations {
            apply(&p, &mut ax);
            let pap = dot(&p, &ax);
            if pap <= 0.0 || !pap.is_finite() {
                return Err(Error::LinearSolve {
                    iterations,
                    residual: inf_norm(&r),
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ax[i];
            }
            iterations += 1;
            if inf_norm(&r) <= 0.5 * threshold {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}
