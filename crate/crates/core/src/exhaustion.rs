//! Exhaustion of the lattice by nested finite domains.
//!
//! The maximal solution is computed on each domain of an increasing
//! sequence, extended by zero, and checked to decrease from one domain to
//! the next. The limit is certified by two finite proxies: the gap between
//! consecutive solutions must shrink below `tol_global`, and the solution
//! must be small on the outermost distance shell of the largest domain.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{lq_norm, Region};
use crate::chern_simons::{
    functional_j, solve_domain, DomainSolution, ModelParams, MonotoneIteration, VortexConfig,
};
use crate::error::{Error, Result};
use crate::field::LatticeField;
use crate::lattice::{l1_distance, LatticeDomain, LatticePoint};

/// Pointwise slack on `ũ_{Ω_{i+1}} ≤ ũ_{Ω_i}` and on the decay tail.
pub const CHAIN_SLACK: f64 = 1e-9;
/// Threshold of [`verify_global_negativity`].
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    #[default]
    Box,
    Ball,
}

impl Shape {
    pub fn domain(self, dimension: usize, size: u64, center: &LatticePoint) -> Result<LatticeDomain> {
        match self {
            Shape::Box => LatticeDomain::cube(dimension, size, center),
            Shape::Ball => LatticeDomain::ball(dimension, size, center),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionSchedule {
    pub dimension: usize,
    pub shape: Shape,
    pub radii: Vec<u64>,
    pub center: LatticePoint,
    pub vortices: VortexConfig,
}

impl ExhaustionSchedule {
    /// Radii `base, 2 base, 4 base, ...` (`levels` of them).
    pub fn doubling(
        dimension: usize,
        shape: Shape,
        base: u64,
        levels: usize,
        vortices: VortexConfig,
    ) -> Self {
        ExhaustionSchedule {
            dimension,
            shape,
            radii: (0..levels as u32).map(|k| base << k).collect(),
            center: LatticePoint::origin(dimension),
            vortices,
        }
    }

    /// Builds the domains, checking the schedule's invariants on the way.
    pub fn domains(&self) -> Result<Vec<Arc<LatticeDomain>>> {
        if self.radii.len() < 2 {
            return Err(Error::InvalidInput(
                "an exhaustion schedule needs at least two radii".into(),
            ));
        }
        if self.radii[0] == 0 || self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "radii must be positive and strictly increasing, got {:?}",
                self.radii
            )));
        }
        let domains: Vec<Arc<LatticeDomain>> = self
            .radii
            .iter()
            .map(|&r| self.shape.domain(self.dimension, r, &self.center).map(Arc::new))
            .collect::<Result<_>>()?;
        for v in self.vortices.vortices() {
            if !domains[0].contains_interior(&v.point) {
                return Err(Error::InvalidInput(format!(
                    "vortex at {} lies outside the smallest domain",
                    v.point
                )));
            }
        }
        for (w, r) in domains.windows(2).zip(self.radii.windows(2)) {
            if !w[0].is_nested_in(&w[1]) {
                return Err(Error::InvalidInput(format!(
                    "domain of radius {} is not nested in radius {}",
                    r[0], r[1]
                )));
            }
        }
        Ok(domains)
    }

    /// Lattice point nearest the mean of the vortex positions; the schedule
    /// center when there are no vortices.
    pub fn decay_center(&self) -> LatticePoint {
        let vortices = self.vortices.vortices();
        if vortices.is_empty() {
            return self.center.clone();
        }
        let m = vortices.len() as f64;
        let coords = (0..self.dimension)
            .map(|axis| {
                let mean = vortices.iter().map(|v| v.point.coords()[axis] as f64).sum::<f64>() / m;
                mean.round() as i64
            })
            .collect();
        LatticePoint::new(coords)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhaustionOptions {
    /// Bound on the last inter-domain gap.
    pub tol_global: f64,
    /// Bound on `sup |u|` over the outermost shell of the largest domain.
    pub decay_threshold: f64,
    /// Start each domain from the previous solution instead of zero.
    /// Not covered by the monotone-chain argument; off by default.
    pub warm_start: bool,
}

impl Default for ExhaustionOptions {
    fn default() -> Self {
        ExhaustionOptions {
            tol_global: 1e-5,
            decay_threshold: 1e-4,
            warm_start: false,
        }
    }
}

/// Per-radius summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusReport {
    pub radius: u64,
    pub iterations: usize,
    pub j_final: f64,
    pub residual: f64,
    pub l2p2_norm: f64,
    pub gap_to_previous: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub all_converged: bool,
    pub gaps_decreasing: bool,
    pub final_gap_ok: bool,
    pub decay_ok: bool,
    pub tail_monotone: bool,
}

impl Certificate {
    pub fn certified(&self) -> bool {
        self.all_converged && self.gaps_decreasing && self.final_gap_ok && self.decay_ok
    }
}

#[derive(Debug, Clone)]
pub struct GlobalSolutionEstimate {
    pub finest_field: LatticeField,
    pub solutions: Vec<DomainSolution>,
    pub reports: Vec<RadiusReport>,
    /// `sup |ũ_{Ω_i} - ũ_{Ω_{i+1}}|` over `Ω̄_i`.
    pub inter_domain_gaps: Vec<f64>,
    pub decay_center: LatticePoint,
    /// Decay profile of each per-radius solution.
    pub decay_profiles: Vec<Vec<(u64, f64)>>,
    /// `sup |u|` on the outermost shell of the largest domain that still
    /// contains interior points.
    pub outer_shell_sup: f64,
    pub certificate: Certificate,
}

impl GlobalSolutionEstimate {
    pub fn decay_profile(&self) -> &[(u64, f64)] {
        self.decay_profiles.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Extends `u` by zero to the closure of `larger`. Only interior values of
/// `u` are carried over.
pub fn null_extend(u: &LatticeField, larger: &Arc<LatticeDomain>) -> Result<LatticeField> {
    if !u.domain().is_nested_in(larger) {
        return Err(Error::InvalidInput(
            "field domain is not nested in the target domain".into(),
        ));
    }
    let mut out = LatticeField::zeros(larger.clone());
    let small = u.domain();
    for (x, &v) in small.interior().iter().zip(u.interior_values()) {
        let j = larger.index_of(x).expect("nested interior point");
        out.values_mut()[j] = v;
    }
    Ok(out)
}

/// `(r, sup { |u(x)| : x ∈ Ω̄, d(x, center) = r })` for `r = 0, 1, ...` up
/// to the largest distance reached by the closure.
pub fn decay_profile(u: &LatticeField, center: &LatticePoint) -> Result<Vec<(u64, f64)>> {
    let mut shells: BTreeMap<u64, f64> = BTreeMap::new();
    for (x, &v) in u.domain().points().iter().zip(u.values()) {
        let r = l1_distance(x, center)?;
        let entry = shells.entry(r).or_insert(0.0);
        *entry = entry.max(v.abs());
    }
    let max_r = shells.keys().next_back().copied().unwrap_or(0);
    // Shells missing the closure (an off-centre source) report zero.
    Ok((0..=max_r).map(|r| (r, shells.get(&r).copied().unwrap_or(0.0))).collect())
}

/// Whether `u ≤ 1e-12` everywhere.
pub fn verify_global_negativity(u: &LatticeField) -> bool {
    u.values().iter().all(|&v| v <= NEGATIVITY_TOLERANCE)
}

/// Whether the profile is non-increasing (up to [`CHAIN_SLACK`]) over its
/// outer half.
pub fn tail_is_monotone(profile: &[(u64, f64)]) -> bool {
    let start = profile.len() / 2;
    profile[start..].windows(2).all(|w| w[1].1 <= w[0].1 + CHAIN_SLACK)
}

fn gaps_shrink(gaps: &[f64]) -> bool {
    gaps.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

fn outer_interior_shell(domain: &LatticeDomain, center: &LatticePoint) -> Result<u64> {
    domain
        .interior()
        .iter()
        .map(|x| l1_distance(x, center))
        .try_fold(0, |m, d| d.map(|d| m.max(d)))
}

/// Solves on every domain of the schedule and certifies the limit.
pub fn run_exhaustion(
    schedule: &ExhaustionSchedule,
    params: &ModelParams,
    options: &ExhaustionOptions,
) -> Result<GlobalSolutionEstimate> {
    params.validate()?;
    let domains = schedule.domains()?;
    let center = schedule.decay_center();

    let mut solutions: Vec<DomainSolution> = Vec::with_capacity(domains.len());
    let mut reports = Vec::with_capacity(domains.len());
    let mut gaps = Vec::new();

    for (k, domain) in domains.iter().enumerate() {
        let solution = match (options.warm_start, solutions.last()) {
            (true, Some(prev)) => {
                let start = null_extend(&prev.field, domain)?;
                MonotoneIteration::with_start(domain.clone(), &schedule.vortices, params, start)?
                    .run(|_, _| {})?
            }
            _ => solve_domain(domain.clone(), &schedule.vortices, params)?,
        };

        let gap_to_previous = match solutions.last() {
            Some(prev) => {
                // Compare on the smaller closure: restrict the new solution.
                let prev_domain = prev.field.domain_arc();
                let restricted = LatticeField::from_fn(prev_domain.clone(), |x| {
                    solution.field.get(x).unwrap_or(0.0)
                });
                let (excess, _) = restricted.max_excess_over(&prev.field)?;
                if excess > CHAIN_SLACK {
                    return Err(Error::ChainViolation {
                        inner: schedule.radii[k - 1],
                        outer: schedule.radii[k],
                        excess,
                    });
                }
                let gap = restricted.sub(&prev.field)?.sup_abs();
                gaps.push(gap);
                Some(gap)
            }
            None => None,
        };

        reports.push(RadiusReport {
            radius: schedule.radii[k],
            iterations: solution.iterations(),
            j_final: functional_j(&solution.field, &solution.source, params)?,
            residual: solution.residual_inf(),
            l2p2_norm: lq_norm(&solution.field, 2.0 * params.p as f64 + 2.0, Region::Interior)?,
            gap_to_previous,
        });
        solutions.push(solution);
    }

    let decay_profiles = solutions
        .iter()
        .map(|s| decay_profile(&s.field, &center))
        .collect::<Result<Vec<_>>>()?;
    let finest = solutions.last().expect("at least two radii").field.clone();
    let outer_r = outer_interior_shell(finest.domain(), &center)?;
    let profile = decay_profiles.last().expect("profiles");
    let outer_shell_sup = profile[outer_r as usize].1;

    let certificate = Certificate {
        all_converged: true,
        gaps_decreasing: gaps_shrink(&gaps),
        final_gap_ok: gaps.last().is_some_and(|&g| g < options.tol_global),
        decay_ok: outer_shell_sup < options.decay_threshold,
        tail_monotone: tail_is_monotone(profile),
    };

    Ok(GlobalSolutionEstimate {
        finest_field: finest,
        solutions,
        reports,
        inter_domain_gaps: gaps,
        decay_center: center,
        decay_profiles,
        outer_shell_sup,
        certificate,
    })
}
