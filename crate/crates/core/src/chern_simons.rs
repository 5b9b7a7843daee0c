//! The generalized Chern-Simons vortex equation
//!
//! ```text
//! Δu = λ e^u (e^u - 1)^{2p+1} + h,   h = 4π Σ n_j δ_{p_j},
//! ```
//!
//! on a finite lattice domain with `u = 0` on the boundary, solved by the
//! monotone scheme
//!
//! ```text
//! (Δ - Λ) u_k = λ e^{u_{k-1}} (e^{u_{k-1}} - 1)^{2p+1} + h - Λ u_{k-1},   u_0 = 0,
//! ```
//!
//! with `Λ > (2p+2) λ`. The iterates decrease pointwise to the maximal
//! solution and the energy `J_Ω` decreases along them; both facts are
//! checked and recorded at every step.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{dirichlet_energy, laplacian_at, lq_norm, pairwise_sum_iter, Region};
use crate::error::{Error, Result};
use crate::field::LatticeField;
use crate::lattice::{LatticeDomain, LatticePoint};
use crate::linsolve::{Backend, LinearOptions, LinearSolver, ShiftedLaplacianSystem};

/// Pointwise slack allowed on the order `u_k ≤ u_{k-1}` before the run is
/// declared numerically broken.
pub const MONOTONICITY_SLACK: f64 = 1e-9;
/// Slack on the energy inequality
/// `J(u_k) + Λ/2 ‖u_{k-1} - u_k‖² ≤ J(u_{k-1})`.
pub const ENERGY_SLACK: f64 = 1e-8;
/// Tolerance used when checking sub-solution and dominance inequalities.
pub const COMPARISON_TOLERANCE: f64 = 1e-9;
/// Sign threshold of the maximum principle check.
pub const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub p: u32,
    /// `Λ`, must exceed `(2p+2) λ`.
    pub shift: f64,
    /// Stop once `‖u_k - u_{k-1}‖_∞` falls below this...
    pub tol_nonlinear: f64,
    /// ...and the equation residual falls below this.
    pub tol_residual: f64,
    pub max_outer_iterations: usize,
    pub backend: Backend,
    pub linear: LinearOptions,
}

impl ModelParams {
    /// Defaults: `Λ = 2 (2p+2) λ`, `tol_nonlinear = 1e-10`,
    /// `tol_residual = 1e-8`, direct linear solves.
    pub fn new(lambda: f64, p: u32) -> Self {
        ModelParams {
            lambda,
            p,
            shift: Self::default_shift(lambda, p),
            tol_nonlinear: 1e-10,
            tol_residual: 1e-8,
            max_outer_iterations: 200_000,
            backend: Backend::Direct,
            linear: LinearOptions::default(),
        }
    }

    pub fn default_shift(lambda: f64, p: u32) -> f64 {
        2.0 * (2.0 * p as f64 + 2.0) * lambda
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {}", self.lambda)));
        }
        let floor = (2.0 * self.p as f64 + 2.0) * self.lambda;
        if !(self.shift > floor) || !self.shift.is_finite() {
            return Err(Error::InvalidInput(format!(
                "shift must exceed (2p+2)·lambda = {floor}, got {}",
                self.shift
            )));
        }
        if !(self.tol_nonlinear > 0.0) || !(self.tol_residual > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidInput("max_outer_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vortex {
    pub point: LatticePoint,
    pub multiplicity: u32,
}

/// Vortex positions `p_j` and multiplicities `n_j`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VortexConfig {
    vortices: Vec<Vortex>,
}

impl VortexConfig {
    pub fn new(vortices: Vec<Vortex>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &vortices {
            if v.multiplicity == 0 {
                return Err(Error::InvalidInput(format!(
                    "vortex at {} has multiplicity 0",
                    v.point
                )));
            }
            if !seen.insert(&v.point) {
                return Err(Error::InvalidInput(format!("duplicate vortex at {}", v.point)));
            }
        }
        if let Some(first) = vortices.first() {
            let n = first.point.dimension();
            if let Some(bad) = vortices.iter().find(|v| v.point.dimension() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: bad.point.dimension(),
                });
            }
        }
        Ok(VortexConfig { vortices })
    }

    pub fn empty() -> Self {
        VortexConfig::default()
    }

    /// A single vortex of the given multiplicity.
    pub fn single(point: LatticePoint, multiplicity: u32) -> Result<Self> {
        Self::new(vec![Vortex { point, multiplicity }])
    }

    pub fn vortices(&self) -> &[Vortex] {
        &self.vortices
    }

    pub fn len(&self) -> usize {
        self.vortices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }

    /// `N = 4π Σ n_j`.
    pub fn total_charge(&self) -> f64 {
        4.0 * PI * self.vortices.iter().map(|v| v.multiplicity as f64).sum::<f64>()
    }
}

/// `h = 4π Σ n_j δ_{p_j}` on the closure of `domain`.
pub fn source_h(domain: &Arc<LatticeDomain>, vortices: &VortexConfig) -> Result<LatticeField> {
    let mut h = LatticeField::zeros(domain.clone());
    for v in vortices.vortices() {
        if v.point.dimension() != domain.dimension() {
            return Err(Error::DimensionMismatch {
                expected: domain.dimension(),
                found: v.point.dimension(),
            });
        }
        match domain.index_of(&v.point) {
            Some(i) if domain.is_interior_index(i) => {
                h.values_mut()[i] = 4.0 * PI * v.multiplicity as f64;
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "vortex at {} is not in the domain interior",
                    v.point
                )))
            }
        }
    }
    Ok(h)
}

/// `λ e^u (e^u - 1)^{2p+1}`, with `e^u - 1` evaluated by `exp_m1`.
pub fn nonlinearity(u: f64, params: &ModelParams) -> f64 {
    params.lambda * u.exp() * u.exp_m1().powi(2 * params.p as i32 + 1)
}

/// Derivative of [`nonlinearity`]: `λ e^u (e^u - 1)^{2p} [(2p+2) e^u - 1]`.
pub fn nonlinearity_derivative(u: f64, params: &ModelParams) -> f64 {
    let e = u.exp();
    let two_p = 2 * params.p as i32;
    params.lambda * e * u.exp_m1().powi(two_p) * ((two_p as f64 + 2.0) * e - 1.0)
}

/// `λ/(2p+2) (e^u - 1)^{2p+2}`, whose derivative is [`nonlinearity`].
pub fn potential(u: f64, params: &ModelParams) -> f64 {
    let k = 2 * params.p as i32 + 2;
    params.lambda / k as f64 * u.exp_m1().powi(k)
}

/// `J_Ω(u) = ½ E_Ω(u) + Σ_Ω [λ/(2p+2) (e^u - 1)^{2p+2} + h u]`.
pub fn functional_j(u: &LatticeField, h: &LatticeField, params: &ModelParams) -> Result<f64> {
    u.check_same_domain(h)?;
    let interior = u.interior_values();
    let hv = h.interior_values();
    let bulk = pairwise_sum_iter(
        interior
            .iter()
            .zip(hv)
            .map(|(&ux, &hx)| potential(ux, params) + hx * ux),
    );
    Ok(0.5 * dirichlet_energy(u) + bulk)
}

/// `Δu - λ e^u (e^u - 1)^{2p+1} - h` on the interior, zero on the boundary.
pub fn residual(u: &LatticeField, h: &LatticeField, params: &ModelParams) -> Result<LatticeField> {
    u.check_same_domain(h)?;
    let domain = u.domain_arc().clone();
    let vals: Vec<f64> = (0..domain.interior_len())
        .map(|i| laplacian_at(u, i) - nonlinearity(u.values()[i], params) - h.values()[i])
        .collect();
    LatticeField::from_interior(domain, &vals)
}

fn residual_inf(u: &LatticeField, h: &LatticeField, params: &ModelParams) -> f64 {
    (0..u.domain().interior_len())
        .map(|i| (laplacian_at(u, i) - nonlinearity(u.values()[i], params) - h.values()[i]).abs())
        .fold(0.0, f64::max)
}

/// Prepares the linear solver for the scheme on `domain`.
pub fn prepare_solver(domain: Arc<LatticeDomain>, params: &ModelParams) -> Result<LinearSolver> {
    params.validate()?;
    let system = ShiftedLaplacianSystem::assemble(domain, params.shift)?;
    LinearSolver::new(Arc::new(system), params.backend, params.linear)
}

/// One step of the monotone scheme. Fails with
/// [`Error::MonotonicityBreakdown`] if the new iterate exceeds `u_prev` by
/// more than [`MONOTONICITY_SLACK`] anywhere.
pub fn iterate_step(
    u_prev: &LatticeField,
    h: &LatticeField,
    params: &ModelParams,
    solver: &LinearSolver,
) -> Result<LatticeField> {
    step_impl(u_prev, h, params, solver, 0).map(|(u, _)| u)
}

fn step_impl(
    u_prev: &LatticeField,
    h: &LatticeField,
    params: &ModelParams,
    solver: &LinearSolver,
    iteration: usize,
) -> Result<(LatticeField, usize)> {
    u_prev.check_same_domain(h)?;
    let domain = solver.system().domain().clone();
    if u_prev.domain() != domain.as_ref() {
        return Err(Error::DomainMismatch);
    }
    match solver.system().shift() {
        Some(s) if s == params.shift => {}
        _ => {
            return Err(Error::InvalidInput(
                "linear system was assembled with a different shift".into(),
            ))
        }
    }
    let rhs: Vec<f64> = u_prev
        .interior_values()
        .iter()
        .zip(h.interior_values())
        .map(|(&u, &hx)| nonlinearity(u, params) + hx - params.shift * u)
        .collect();
    let (w, stats) = solver.solve_interior(&rhs, Some(u_prev.interior_values()))?;
    let next = LatticeField::from_interior(domain.clone(), &w)?;
    let (excess, at) = next.max_excess_over(u_prev)?;
    if excess > MONOTONICITY_SLACK {
        return Err(Error::MonotonicityBreakdown {
            iteration,
            excess,
            point: domain.point(at).to_string(),
        });
    }
    Ok((next, stats.iterations))
}

/// One row of an [`IterationTrace`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub j_value: f64,
    /// `‖u_k - u_{k-1}‖_∞`.
    pub sup_change: f64,
    /// `‖Δu_k - λ e^{u_k}(e^{u_k}-1)^{2p+1} - h‖_∞` on the interior.
    pub residual_inf: f64,
    /// `‖u_k‖_{l^{2p+2}(Ω)}`.
    pub l2p2_norm: f64,
    /// `max (u_k - u_{k-1})`; nonpositive in exact arithmetic.
    pub max_increase: f64,
    /// `J(u_{k-1}) - J(u_k) - Λ/2 ‖u_{k-1} - u_k‖²`; nonnegative in exact
    /// arithmetic.
    pub energy_margin: f64,
    pub monotone_ok: bool,
    pub j_decrease_ok: bool,
    pub linear_iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn all_monotone(&self) -> bool {
        self.records.iter().all(|r| r.monotone_ok)
    }

    pub fn all_energy_decreasing(&self) -> bool {
        self.records.iter().all(|r| r.j_decrease_ok)
    }
}

/// Outcome of a converged [`solve_domain`] run.
#[derive(Debug, Clone)]
pub struct DomainSolution {
    pub field: LatticeField,
    pub source: LatticeField,
    pub trace: IterationTrace,
    /// First iterate `u_1`, kept for the bounds it satisfies.
    pub first_iterate: LatticeField,
}

impl DomainSolution {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn residual_inf(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.residual_inf)
    }
}

/// The monotone scheme as an explicit state machine, for callers that want
/// to observe iterates or keep the trace of a failed run.
pub struct MonotoneIteration {
    params: ModelParams,
    h: LatticeField,
    solver: LinearSolver,
    current: LatticeField,
    j_current: f64,
    first: Option<LatticeField>,
    trace: IterationTrace,
}

impl MonotoneIteration {
    pub fn new(
        domain: Arc<LatticeDomain>,
        vortices: &VortexConfig,
        params: &ModelParams,
    ) -> Result<Self> {
        let start = LatticeField::zeros(domain.clone());
        Self::with_start(domain, vortices, params, start)
    }

    /// Starts the scheme from `start` instead of `0`. The start must be
    /// nonpositive and vanish on the boundary.
    pub fn with_start(
        domain: Arc<LatticeDomain>,
        vortices: &VortexConfig,
        params: &ModelParams,
        start: LatticeField,
    ) -> Result<Self> {
        let h = source_h(&domain, vortices)?;
        start.check_same_domain(&h)?;
        if !start.is_dirichlet_zero() || start.max_value() > 0.0 {
            return Err(Error::InvalidInput(
                "initial iterate must be nonpositive and vanish on the boundary".into(),
            ));
        }
        let solver = prepare_solver(domain, params)?;
        let j_current = functional_j(&start, &h, params)?;
        Ok(MonotoneIteration {
            params: params.clone(),
            h,
            solver,
            current: start,
            j_current,
            first: None,
            trace: IterationTrace::default(),
        })
    }

    pub fn current(&self) -> &LatticeField {
        &self.current
    }

    pub fn source(&self) -> &LatticeField {
        &self.h
    }

    pub fn trace(&self) -> &IterationTrace {
        &self.trace
    }

    pub fn into_trace(self) -> IterationTrace {
        self.trace
    }

    pub fn solver(&self) -> &LinearSolver {
        &self.solver
    }

    /// Advances one step and records it.
    pub fn step(&mut self) -> Result<&IterationRecord> {
        let k = self.trace.len() + 1;
        let params = &self.params;
        let (next, linear_iterations) = step_impl(&self.current, &self.h, params, &self.solver, k)?;
        let diff = self.current.sub(&next)?;
        let sup_change = diff.sup_abs();
        let (max_increase, _) = next.max_excess_over(&self.current)?;
        let step_sq = lq_norm(&diff, 2.0, Region::Interior)?.powi(2);
        let j_next = functional_j(&next, &self.h, params)?;
        let energy_margin = self.j_current - j_next - 0.5 * params.shift * step_sq;
        let record = IterationRecord {
            k,
            j_value: j_next,
            sup_change,
            residual_inf: residual_inf(&next, &self.h, params),
            l2p2_norm: lq_norm(&next, 2.0 * params.p as f64 + 2.0, Region::Interior)?,
            max_increase,
            energy_margin,
            monotone_ok: max_increase <= MONOTONICITY_SLACK,
            j_decrease_ok: energy_margin >= -ENERGY_SLACK,
            linear_iterations,
        };
        if self.first.is_none() {
            self.first = Some(next.clone());
        }
        self.current = next;
        self.j_current = j_next;
        self.trace.records.push(record);
        Ok(self.trace.records.last().unwrap())
    }

    pub fn is_converged(&self) -> bool {
        self.trace.last().is_some_and(|r| {
            r.sup_change < self.params.tol_nonlinear && r.residual_inf < self.params.tol_residual
        })
    }

    /// Iterates until converged, calling `observe(k, u_k)` after each step.
    pub fn run(mut self, mut observe: impl FnMut(usize, &LatticeField)) -> Result<DomainSolution> {
        while !self.is_converged() {
            if self.trace.len() >= self.params.max_outer_iterations {
                let last = self.trace.last().cloned();
                return Err(Error::NotConverged {
                    iterations: self.trace.len(),
                    last_change: last.as_ref().map_or(f64::NAN, |r| r.sup_change),
                    residual: last.as_ref().map_or(f64::NAN, |r| r.residual_inf),
                });
            }
            let k = self.step()?.k;
            observe(k, &self.current);
        }
        Ok(DomainSolution {
            first_iterate: self.first.expect("at least one step was taken"),
            field: self.current,
            source: self.h,
            trace: self.trace,
        })
    }
}

/// Runs the monotone scheme from `u_0 = 0` to convergence.
pub fn solve_domain(
    domain: Arc<LatticeDomain>,
    vortices: &VortexConfig,
    params: &ModelParams,
) -> Result<DomainSolution> {
    MonotoneIteration::new(domain, vortices, params)?.run(|_, _| {})
}

/// Whether `candidate` satisfies `ΔU ≥ λe^U(e^U-1)^{2p+1} + h` on the
/// interior and `U ≤ 0` on the boundary, up to [`COMPARISON_TOLERANCE`].
pub fn is_subsolution(candidate: &LatticeField, h: &LatticeField, params: &ModelParams) -> Result<bool> {
    let r = residual(candidate, h, params)?;
    Ok(r.interior_values().iter().all(|&v| v >= -COMPARISON_TOLERANCE)
        && candidate
            .boundary_values()
            .iter()
            .all(|&v| v <= COMPARISON_TOLERANCE))
}

/// Checks that `candidate ≤ solution` pointwise. The candidate must be a
/// sub-solution, otherwise the comparison claim does not apply and the
/// input is rejected.
pub fn verify_subsolution_dominance(
    candidate: &LatticeField,
    solution: &LatticeField,
    h: &LatticeField,
    params: &ModelParams,
) -> Result<bool> {
    candidate.check_same_domain(solution)?;
    if !is_subsolution(candidate, h, params)? {
        return Err(Error::InvalidInput(
            "candidate is not a sub-solution of the equation".into(),
        ));
    }
    let (excess, _) = candidate.max_excess_over(solution)?;
    Ok(excess <= COMPARISON_TOLERANCE)
}

/// Maximum principle: if `g > 0` on the closure, `f ≤ 0` on the boundary
/// and `(Δ - g) f ≥ 0` on the interior, then `f ≤ 0` on the closure.
/// Returns whether the conclusion holds; instances violating the
/// hypotheses are rejected.
pub fn max_principle_check(f: &LatticeField, g: &LatticeField) -> Result<bool> {
    max_principle_check_with(f, g, laplacian_at)
}

/// As [`max_principle_check`] with a caller-supplied Laplacian.
pub fn max_principle_check_with(
    f: &LatticeField,
    g: &LatticeField,
    lap: impl Fn(&LatticeField, usize) -> f64,
) -> Result<bool> {
    f.check_same_domain(g)?;
    if let Some(bad) = g.values().iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!("g must be positive, found {bad}")));
    }
    if let Some(bad) = f.boundary_values().iter().find(|&&v| v > SIGN_TOLERANCE) {
        return Err(Error::InvalidInput(format!(
            "f must be nonpositive on the boundary, found {bad}"
        )));
    }
    let domain = f.domain();
    let g_max = g.values().iter().fold(0.0f64, |m, v| m.max(*v));
    let tol = 1e-12 * (1.0 + f.sup_abs()) * (domain.degree() as f64 + g_max);
    for i in 0..domain.interior_len() {
        let value = lap(f, i) - g.values()[i] * f.values()[i];
        if value < -tol {
            return Err(Error::InvalidInput(format!(
                "(Δ - g) f = {value:e} < 0 at {}",
                domain.point(i)
            )));
        }
    }
    Ok(f.values().iter().all(|&v| v <= SIGN_TOLERANCE))
}
