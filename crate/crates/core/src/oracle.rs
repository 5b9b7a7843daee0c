//! Damped Newton solver for the full nonlinear Dirichlet problem
//! `F(u) = Δu - λ e^u (e^u - 1)^{2p+1} - h = 0`, independent of the
//! monotone scheme. Used to certify fixed points on small domains.

use std::sync::Arc;

use crate::calculus::laplacian_at;
use crate::chern_simons::{nonlinearity, nonlinearity_derivative, source_h, ModelParams, VortexConfig};
use crate::error::{Error, Result};
use crate::field::LatticeField;
use crate::lattice::LatticeDomain;
use crate::linsolve::BandMatrix;

/// Largest interior the oracle accepts.
pub const MAX_ORACLE_UNKNOWNS: usize = 10_000;
pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const MAX_NEWTON_ITERATIONS: usize = 100;
const MIN_STEP: f64 = 1.0 / (1u64 << 30) as f64;

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub field: LatticeField,
    pub iterations: usize,
    pub residual_inf: f64,
}

fn band_of(domain: &LatticeDomain) -> usize {
    (0..domain.interior_len())
        .flat_map(|i| {
            domain
                .interior_neighbors(i)
                .filter(|&j| j < domain.interior_len())
                .map(move |j| i.abs_diff(j))
        })
        .max()
        .unwrap_or(0)
}

/// `F(u)` on interior unknowns; `u` holds interior values only.
pub fn residual_vector(
    domain: &Arc<LatticeDomain>,
    h: &LatticeField,
    params: &ModelParams,
    u: &[f64],
) -> Vec<f64> {
    let field = LatticeField::from_interior(domain.clone(), u).expect("interior length");
    (0..domain.interior_len())
        .map(|i| laplacian_at(&field, i) - nonlinearity(u[i], params) - h.values()[i])
        .collect()
}

/// Analytic Jacobian of `F`: the Laplacian stencil on interior unknowns
/// minus `diag(λ e^u (e^u - 1)^{2p} [(2p+2) e^u - 1])`.
pub fn jacobian(domain: &LatticeDomain, params: &ModelParams, u: &[f64]) -> BandMatrix {
    let n = domain.interior_len();
    let bw = band_of(domain);
    let mut jac = BandMatrix::zeros(n, bw, bw);
    for i in 0..n {
        jac.set(
            i,
            i,
            -(domain.degree() as f64) - nonlinearity_derivative(u[i], params),
        );
        for j in domain.interior_neighbors(i).filter(|&j| j < n) {
            jac.add(i, j, 1.0);
        }
    }
    jac
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton with backtracking on `‖F‖₂` (halving, down to `2^-30`).
pub fn newton_solve(
    domain: Arc<LatticeDomain>,
    vortices: &VortexConfig,
    params: &ModelParams,
    u_init: &LatticeField,
) -> Result<NewtonOutcome> {
    params.validate()?;
    let n = domain.interior_len();
    if n > MAX_ORACLE_UNKNOWNS {
        return Err(Error::InvalidInput(format!(
            "oracle is limited to {MAX_ORACLE_UNKNOWNS} unknowns, domain has {n}"
        )));
    }
    let h = source_h(&domain, vortices)?;
    u_init.check_same_domain(&h)?;
    let mut u = u_init.interior_values().to_vec();
    let mut f = residual_vector(&domain, &h, params, &u);
    let mut iterations = 0;

    while norm_inf(&f) >= NEWTON_TOLERANCE {
        if iterations >= MAX_NEWTON_ITERATIONS {
            return Err(Error::Newton {
                iterations,
                residual: norm_inf(&f),
                reason: "iteration limit reached".into(),
            });
        }
        let jac = jacobian(&domain, params, &u);
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = jac.solve(&neg_f).map_err(|e| Error::Newton {
            iterations,
            residual: norm_inf(&f),
            reason: e.to_string(),
        })?;

        let current = norm2(&f);
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            let f_trial = residual_vector(&domain, &h, params, &trial);
            let r = norm2(&f_trial);
            if r.is_finite() && r < current {
                u = trial;
                f = f_trial;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                return Err(Error::Newton {
                    iterations,
                    residual: norm_inf(&f),
                    reason: "line search exhausted".into(),
                });
            }
        }
        iterations += 1;
    }

    Ok(NewtonOutcome {
        field: LatticeField::from_interior(domain, &u)?,
        iterations,
        residual_inf: norm_inf(&f),
    })
}

/// Largest discrepancy between the analytic Jacobian and central finite
/// differences with step `step`, measured as `|a - fd| / max(1, |a|)`.
pub fn jacobian_fd_error(
    domain: &Arc<LatticeDomain>,
    vortices: &VortexConfig,
    params: &ModelParams,
    u: &LatticeField,
    step: f64,
) -> Result<f64> {
    let h = source_h(domain, vortices)?;
    u.check_same_domain(&h)?;
    let n = domain.interior_len();
    let base = u.interior_values().to_vec();
    let jac = jacobian(domain, params, &base);
    let mut worst = 0.0f64;
    let mut probe = base.clone();
    for col in 0..n {
        probe[col] = base[col] + step;
        let plus = residual_vector(domain, &h, params, &probe);
        probe[col] = base[col] - step;
        let minus = residual_vector(domain, &h, params, &probe);
        probe[col] = base[col];
        for row in 0..n {
            let fd = (plus[row] - minus[row]) / (2.0 * step);
            let a = jac.get(row, col);
            worst = worst.max((a - fd).abs() / a.abs().max(1.0));
        }
    }
    Ok(worst)
}

/// [`jacobian_fd_error`] with step `1e-6`.
pub fn jacobian_fd_check(
    domain: &Arc<LatticeDomain>,
    vortices: &VortexConfig,
    params: &ModelParams,
    u: &LatticeField,
) -> Result<f64> {
    jacobian_fd_error(domain, vortices, params, u, 1e-6)
}
