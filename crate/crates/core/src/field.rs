use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, LatticePoint};

/// A real function on the closure of a domain, stored in the domain's
/// index order.
#[derive(Debug, Clone)]
pub struct LatticeField {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(domain: Arc<LatticeDomain>) -> Self {
        let values = vec![0.0; domain.closure_len()];
        LatticeField { domain, values }
    }

    pub fn from_values(domain: Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.closure_len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values but the domain closure has {} points",
                values.len(),
                domain.closure_len()
            )));
        }
        Ok(LatticeField { domain, values })
    }

    /// Field with the given interior values and zero on the boundary.
    pub fn from_interior(domain: Arc<LatticeDomain>, interior: &[f64]) -> Result<Self> {
        if interior.len() != domain.interior_len() {
            return Err(Error::InvalidInput(format!(
                "expected {} interior values, got {}",
                domain.interior_len(),
                interior.len()
            )));
        }
        let mut values = vec![0.0; domain.closure_len()];
        values[..interior.len()].copy_from_slice(interior);
        Ok(LatticeField { domain, values })
    }

    pub fn from_fn(domain: Arc<LatticeDomain>, f: impl FnMut(&LatticePoint) -> f64) -> Self {
        let values = domain.points().iter().map(f).collect();
        LatticeField { domain, values }
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn domain_arc(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interior_values(&self) -> &[f64] {
        &self.values[..self.domain.interior_len()]
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.values[self.domain.interior_len()..]
    }

    pub fn get(&self, x: &LatticePoint) -> Option<f64> {
        self.domain.index_of(x).map(|i| self.values[i])
    }

    /// Value of the null extension of the field to the whole lattice.
    pub fn extended(&self, x: &LatticePoint) -> f64 {
        self.get(x).unwrap_or(0.0)
    }

    /// Whether the field vanishes on every boundary point.
    pub fn is_dirichlet_zero(&self) -> bool {
        self.boundary_values().iter().all(|&v| v == 0.0)
    }

    pub fn set_boundary_zero(&mut self) {
        let start = self.domain.interior_len();
        self.values[start..].fill(0.0);
    }

    pub fn same_domain(&self, other: &LatticeField) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub(crate) fn check_same_domain(&self, other: &LatticeField) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> LatticeField {
        LatticeField {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> LatticeField {
        self.map(|v| c * v)
    }

    /// `self - other`, pointwise.
    pub fn sub(&self, other: &LatticeField) -> Result<LatticeField> {
        self.check_same_domain(other)?;
        Ok(LatticeField {
            domain: self.domain.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_x (self(x) - other(x))`.
    pub fn max_excess_over(&self, other: &LatticeField) -> Result<(f64, usize)> {
        self.check_same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .enumerate()
            .fold((f64::NEG_INFINITY, 0), |(m, at), (i, d)| {
                if d > m {
                    (d, i)
                } else {
                    (m, at)
                }
            }))
    }
}
