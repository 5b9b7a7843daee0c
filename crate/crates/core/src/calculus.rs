//! Discrete calculus on lattice domains.
//!
//! Sign convention: `Δu(x) = Σ_{y∼x} (u(y) - u(x))`, so `Δ` is negative
//! semidefinite. Energies count every edge inside the closure once; edges
//! leaving the closure are ignored. Norms and the `1,q` seminorm treat a
//! field as its null extension to the whole lattice.
//!
//! Sums over points and edges use pairwise summation.

pub use crate::field::LatticeField;

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

pub(crate) fn pairwise_sum_iter(values: impl Iterator<Item = f64>) -> f64 {
    let buf: Vec<f64> = values.collect();
    pairwise_sum(&buf)
}

/// Region over which a norm is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Interior,
    Closure,
}

fn interior_index(u: &LatticeField, x: &LatticePoint) -> Result<usize> {
    match u.domain().index_of(x) {
        Some(i) if u.domain().is_interior_index(i) => Ok(i),
        Some(_) => Err(Error::InvalidInput(format!(
            "{x} lies on the boundary; its neighbours leave the closure"
        ))),
        None => Err(Error::InvalidInput(format!("{x} is outside the domain closure"))),
    }
}

/// `Δu` at the interior point with closure index `i`.
pub fn laplacian_at(u: &LatticeField, i: usize) -> f64 {
    let values = u.values();
    let ui = values[i];
    u.domain()
        .interior_neighbors(i)
        .map(|j| values[j] - ui)
        .sum()
}

pub fn laplacian(u: &LatticeField, x: &LatticePoint) -> Result<f64> {
    let i = interior_index(u, x)?;
    Ok(laplacian_at(u, i))
}

/// `Δu` on every interior point, in index order.
pub fn laplacian_interior(u: &LatticeField) -> Vec<f64> {
    (0..u.domain().interior_len()).map(|i| laplacian_at(u, i)).collect()
}

/// `Γ(u, v)(x)` restricted to neighbour pairs inside the closure. For
/// interior points this is the full lattice gradient form.
pub fn gradient_form_at(u: &LatticeField, v: &LatticeField, i: usize) -> f64 {
    let (uv, vv) = (u.values(), v.values());
    0.5 * u
        .domain()
        .neighbor_slots(i)
        .iter()
        .flatten()
        .map(|&j| (uv[j] - uv[i]) * (vv[j] - vv[i]))
        .sum::<f64>()
}

pub fn gradient_form(u: &LatticeField, v: &LatticeField, x: &LatticePoint) -> Result<f64> {
    u.check_same_domain(v)?;
    let i = interior_index(u, x)?;
    Ok(gradient_form_at(u, v, i))
}

/// `E_Ω(u, v)`: half the sum over ordered adjacent pairs in the closure,
/// i.e. one term per unordered edge.
pub fn bilinear_energy(u: &LatticeField, v: &LatticeField) -> Result<f64> {
    u.check_same_domain(v)?;
    let (uv, vv) = (u.values(), v.values());
    Ok(pairwise_sum_iter(
        u.domain()
            .closure_edges()
            .map(|(i, j)| (uv[j] - uv[i]) * (vv[j] - vv[i])),
    ))
}

/// `E_Ω(u) = E_Ω(u, u)`.
pub fn dirichlet_energy(u: &LatticeField) -> f64 {
    bilinear_energy(u, u).expect("a field shares its own domain")
}

/// Absolute defect of `Σ_{Ω̄} Γ(u, v) = -Σ_Ω Δu · v` for `v` vanishing on
/// the boundary.
pub fn green_identity_defect(u: &LatticeField, v: &LatticeField) -> Result<f64> {
    green_identity_defect_with(u, v, laplacian_at)
}

/// As [`green_identity_defect`] with a caller-supplied Laplacian, so the
/// check can be pointed at a deliberately broken operator.
pub fn green_identity_defect_with(
    u: &LatticeField,
    v: &LatticeField,
    lap: impl Fn(&LatticeField, usize) -> f64,
) -> Result<f64> {
    u.check_same_domain(v)?;
    if !v.is_dirichlet_zero() {
        return Err(Error::InvalidInput(
            "Green's identity needs v to vanish on the boundary".into(),
        ));
    }
    let domain = u.domain();
    let lhs = pairwise_sum_iter((0..domain.closure_len()).map(|i| gradient_form_at(u, v, i)));
    let rhs = pairwise_sum_iter((0..domain.interior_len()).map(|i| lap(u, i) * v.values()[i]));
    Ok((lhs + rhs).abs())
}

/// Exponent of an `l^q` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl From<f64> for Exponent {
    fn from(q: f64) -> Self {
        if q.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Finite(q)
        }
    }
}

/// `(Σ |v|^q)^{1/q}` computed with a sup-norm rescaling so large `q`
/// neither overflows nor underflows.
pub(crate) fn lq_of_slice(values: &[f64], q: f64) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s = pairwise_sum_iter(values.iter().map(|v| (v.abs() / scale).powf(q)));
    scale * s.powf(1.0 / q)
}

pub fn lq_norm(u: &LatticeField, q: impl Into<Exponent>, region: Region) -> Result<f64> {
    let values = match region {
        Region::Interior => u.interior_values(),
        Region::Closure => u.values(),
    };
    match q.into() {
        Exponent::Infinity => Ok(values.iter().fold(0.0, |m, v| m.max(v.abs()))),
        Exponent::Finite(q) if q >= 1.0 => Ok(lq_of_slice(values, q)),
        Exponent::Finite(q) => Err(Error::InvalidInput(format!(
            "norm exponent must be at least 1, got {q}"
        ))),
    }
}

/// `|ũ|_{1,q} = (Σ_{x ∈ Z^n} Σ_{y∼x} |ũ(y) - ũ(x)|^q)^{1/q}` for the null
/// extension `ũ`.
pub fn seminorm_1q(u: &LatticeField, q: f64) -> Result<f64> {
    if q < 1.0 || q.is_nan() {
        return Err(Error::InvalidInput(format!(
            "seminorm exponent must be at least 1, got {q}"
        )));
    }
    let domain = u.domain();
    let values = u.values();
    let mut diffs = Vec::with_capacity(domain.closure_len() * domain.degree());
    for i in 0..domain.closure_len() {
        for slot in domain.neighbor_slots(i) {
            match slot {
                Some(j) => diffs.push(values[*j] - values[i]),
                // The pair (x, y) and its reverse (y, x) with y outside the closure.
                None => {
                    diffs.push(values[i]);
                    diffs.push(values[i]);
                }
            }
        }
    }
    if q.is_infinite() {
        return Ok(diffs.iter().fold(0.0, |m, d| m.max(d.abs())));
    }
    Ok(lq_of_slice(&diffs, q))
}

/// Empirical constant of the chained interpolation inequality
/// `‖u‖_{4p+4} ≤ C |u|_{1,2}^{1/(2p+2)} ‖u‖_{4p+2}^{(2p+1)/(2p+2)}`
/// for the null extension of `u`.
pub fn gns_ratio(u: &LatticeField, p: u32) -> Result<f64> {
    if u.values().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput(
            "the interpolation ratio is undefined for the zero field".into(),
        ));
    }
    let p = p as f64;
    let top = lq_norm(u, 4.0 * p + 4.0, Region::Closure)?;
    let grad = seminorm_1q(u, 2.0)?;
    let low = lq_norm(u, 4.0 * p + 2.0, Region::Closure)?;
    let gamma = 2.0 * p + 2.0;
    Ok(top / (grad.powf(1.0 / gamma) * low.powf((2.0 * p + 1.0) / gamma)))
}
