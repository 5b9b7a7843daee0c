//! Maximal topological solutions of the generalized Chern-Simons vortex
//! equation
//!
//! ```text
//! Δu = λ e^u (e^u - 1)^{2p+1} + 4π Σ n_j δ_{p_j}   on Z^n,   u(x) → 0 as |x| → ∞
//! ```
//!
//! computed by a monotone iteration on finite lattice domains and an
//! exhaustion over nested domains.
//!
//! Module map:
//! - [`lattice`]: points, adjacency, finite domains and their boundaries.
//! - [`calculus`]: Laplacian, gradient form, energies, norms.
//! - [`linsolve`]: the shifted Dirichlet problem `(Δ - Λ) w = f`.
//! - [`chern_simons`]: the model, its energy and the monotone scheme.
//! - [`exhaustion`]: nested domains and the global limit.
//! - [`oracle`]: an independent damped Newton solver.
//! - [`config`], [`io`]: run configurations and output formats.
//! - [`verify`]: randomized property suites.

pub mod calculus;
pub mod chern_simons;
pub mod config;
pub mod error;
pub mod exhaustion;
mod field;
pub mod io;
pub mod lattice;
pub mod linsolve;
pub mod oracle;
pub mod verify;

pub use calculus::LatticeField;
pub use chern_simons::{solve_domain, DomainSolution, IterationTrace, ModelParams, Vortex, VortexConfig};
pub use error::{Error, Result};
pub use exhaustion::{run_exhaustion, ExhaustionOptions, ExhaustionSchedule, GlobalSolutionEstimate, Shape};
pub use lattice::{LatticeDomain, LatticePoint};
pub use linsolve::{Backend, ShiftedLaplacianSystem};
