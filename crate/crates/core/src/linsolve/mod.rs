//! The shifted Dirichlet problem `(Δ - Λ) w = f` on `Ω`, `w = 0` on `δΩ`.
//!
//! The assembled matrix is `M = -(Δ - Λ)` restricted to interior unknowns:
//! row `x` has `2n + Λ(x)` on the diagonal and `-1` for every interior
//! neighbour. Boundary neighbours drop out because `w` vanishes there.
//! `M` is symmetric and strictly diagonally dominant, hence positive
//! definite, and the solvers work with `M w = -f`.

pub mod banded;
mod cg;

use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::LatticeField;
use crate::lattice::LatticeDomain;

pub use banded::{BandMatrix, BandedCholesky};

/// Relative tolerance of the linear solves.
pub const DEFAULT_LINEAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Banded Cholesky factorization.
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    #[default]
    ConjugateGradient,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Backend::Direct),
            "cg" | "conjugate_gradient" => Ok(Backend::ConjugateGradient),
            other => Err(Error::InvalidInput(format!("unknown linear backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    pub tolerance: f64,
    /// `None` means `10 |Ω|`.
    pub max_iterations: Option<usize>,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions {
            tolerance: DEFAULT_LINEAR_TOLERANCE,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub backend: Backend,
    /// CG iterations; zero for the direct backend.
    pub iterations: usize,
    /// `‖(Δ - Λ) w - f‖_∞` on the interior.
    pub residual_inf: f64,
}

/// `M = -(Δ - Λ)` on the interior of a domain, in CSR form.
#[derive(Debug, Clone)]
pub struct ShiftedLaplacianSystem {
    domain: Arc<LatticeDomain>,
    shifts: Vec<f64>,
    uniform_shift: Option<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl ShiftedLaplacianSystem {
    pub fn assemble(domain: Arc<LatticeDomain>, shift: f64) -> Result<Self> {
        if !(shift > 0.0) || !shift.is_finite() {
            return Err(Error::InvalidInput(format!(
                "the shift must be a positive number, got {shift}"
            )));
        }
        let shifts = vec![shift; domain.interior_len()];
        let mut system = Self::build(domain, shifts)?;
        system.uniform_shift = Some(shift);
        Ok(system)
    }

    /// `-(Δ - g)` with a pointwise positive shift `g` given on the interior.
    pub fn assemble_variable(domain: Arc<LatticeDomain>, shifts: Vec<f64>) -> Result<Self> {
        if shifts.len() != domain.interior_len() {
            return Err(Error::InvalidInput(format!(
                "expected {} shift values, got {}",
                domain.interior_len(),
                shifts.len()
            )));
        }
        if let Some(g) = shifts.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidInput(format!("shift values must be positive, got {g}")));
        }
        Self::build(domain, shifts)
    }

    fn build(domain: Arc<LatticeDomain>, shifts: Vec<f64>) -> Result<Self> {
        let n = domain.interior_len();
        let degree = domain.degree() as f64;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let mut row: Vec<(usize, f64)> = domain
                .interior_neighbors(i)
                .filter(|&j| j < n)
                .map(|j| (j, -1.0))
                .collect();
            row.push((i, degree + shifts[i]));
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(ShiftedLaplacianSystem {
            domain,
            shifts,
            uniform_shift: None,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    /// The constant shift `Λ`, if the system was assembled with one.
    pub fn shift(&self) -> Option<f64> {
        self.uniform_shift
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn dimension(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// Nonzeros as `(row, col, value)`, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dimension()).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dimension()).map(|i| self.entry(i, i)).collect()
    }

    pub fn bandwidth(&self) -> usize {
        self.triplets().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.triplets().all(|(i, j, v)| self.entry(j, i) == v)
    }

    /// `y = M x` on interior vectors.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut mv = vec![0.0; v.len()];
        self.apply(v, &mut mv);
        v.iter().zip(&mv).map(|(a, b)| a * b).sum()
    }

    /// `‖(Δ - Λ) w - f‖_∞ = ‖M w + f‖_∞` over the interior.
    pub fn residual_inf(&self, w: &[f64], f: &[f64]) -> f64 {
        let mut mw = vec![0.0; w.len()];
        self.apply(w, &mut mw);
        mw.iter().zip(f).fold(0.0, |m, (a, b)| m.max((a + b).abs()))
    }

    /// Writes the matrix as `row col value` lines with 0-based indices.
    pub fn write_coo(&self, mut out: impl Write) -> std::io::Result<()> {
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }

    pub fn factor(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(self.dimension(), self.bandwidth(), |i, j| self.entry(i, j))
    }
}

/// See [`ShiftedLaplacianSystem::assemble`].
pub fn assemble(domain: Arc<LatticeDomain>, shift: f64) -> Result<ShiftedLaplacianSystem> {
    ShiftedLaplacianSystem::assemble(domain, shift)
}

/// A system prepared for repeated solves. The direct backend factors once.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    system: Arc<ShiftedLaplacianSystem>,
    backend: Backend,
    options: LinearOptions,
    factor: Option<BandedCholesky>,
    inv_diag: Vec<f64>,
}

impl LinearSolver {
    pub fn new(
        system: Arc<ShiftedLaplacianSystem>,
        backend: Backend,
        options: LinearOptions,
    ) -> Result<Self> {
        let factor = match backend {
            Backend::Direct => Some(system.factor()?),
            Backend::ConjugateGradient => None,
        };
        let inv_diag = system.diagonal().iter().map(|d| 1.0 / d).collect();
        Ok(LinearSolver {
            system,
            backend,
            options,
            factor,
            inv_diag,
        })
    }

    pub fn system(&self) -> &ShiftedLaplacianSystem {
        &self.system
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Solves `(Δ - Λ) w = f` for interior vectors. `guess` seeds CG and is
    /// ignored by the direct backend.
    pub fn solve_interior(&self, f: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.system.dimension();
        if f.len() != n {
            return Err(Error::InvalidInput(format!(
                "right-hand side has {} entries, system has {n}",
                f.len()
            )));
        }
        let f_inf = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = self.options.tolerance * (1.0 + f_inf);
        let b: Vec<f64> = f.iter().map(|v| -v).collect();

        match (&self.factor, self.backend) {
            (Some(chol), Backend::Direct) => {
                let mut w = b;
                chol.solve_in_place(&mut w);
                let residual_inf = self.system.residual_inf(&w, f);
                if residual_inf > threshold {
                    return Err(Error::LinearSolve {
                        iterations: 0,
                        residual: residual_inf,
                    });
                }
                Ok((
                    w,
                    SolveStats {
                        backend: Backend::Direct,
                        iterations: 0,
                        residual_inf,
                    },
                ))
            }
            _ => {
                let mut w = match guess {
                    Some(g) if g.len() == n => g.to_vec(),
                    _ => vec![0.0; n],
                };
                let max_iterations = self.options.max_iterations.unwrap_or(10 * n.max(1));
                let out = cg::solve(
                    |x, y| self.system.apply(x, y),
                    &self.inv_diag,
                    &b,
                    &mut w,
                    threshold,
                    max_iterations,
                )?;
                Ok((
                    w,
                    SolveStats {
                        backend: Backend::ConjugateGradient,
                        iterations: out.iterations,
                        residual_inf: out.residual_inf,
                    },
                ))
            }
        }
    }

    /// Field version of [`solve_interior`](Self::solve_interior); boundary
    /// values of `rhs` are ignored and the result vanishes on the boundary.
    pub fn solve_field(&self, rhs: &LatticeField) -> Result<(LatticeField, SolveStats)> {
        if !Arc::ptr_eq(rhs.domain_arc(), self.system.domain())
            && rhs.domain() != self.system.domain().as_ref()
        {
            return Err(Error::DomainMismatch);
        }
        let (w, stats) = self.solve_interior(rhs.interior_values(), None)?;
        Ok((LatticeField::from_interior(self.system.domain().clone(), &w)?, stats))
    }
}

/// Solves `(Δ - Λ) w = f`, `w = 0` on the boundary, with the default
/// backend and tolerances.
pub fn solve(system: &ShiftedLaplacianSystem, rhs: &LatticeField) -> Result<LatticeField> {
    solve_backend(system, rhs, Backend::default(), LinearOptions::default()).map(|(w, _)| w)
}

pub fn solve_backend(
    system: &ShiftedLaplacianSystem,
    rhs: &LatticeField,
    backend: Backend,
    options: LinearOptions,
) -> Result<(LatticeField, SolveStats)> {
    LinearSolver::new(Arc::new(system.clone()), backend, options)?.solve_field(rhs)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::calculus::laplacian_at;
    use crate::lattice::{make_ball, make_box, LatticePoint};

    fn box_domain(n: usize, half: u64) -> Arc<LatticeDomain> {
        Arc::new(make_box(n, half, &LatticePoint::origin(n)).unwrap())
    }

    fn single_point() -> Arc<LatticeDomain> {
        Arc::new(make_ball(2, 0, &LatticePoint::origin(2)).unwrap())
    }

    fn random_rhs(domain: &Arc<LatticeDomain>, rng: &mut ChaCha8Rng) -> LatticeField {
        let v: Vec<f64> = (0..domain.interior_len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        LatticeField::from_interior(domain.clone(), &v).unwrap()
    }

    #[test]
    fn assemble_single_point() {
        let s = assemble(single_point(), 1.5).unwrap();
        assert_eq!(s.dimension(), 1);
        assert_eq!(s.entry(0, 0), 5.5);
        assert_eq!(s.nnz(), 1);
    }

    #[test]
    fn assemble_three_by_three() {
        let d = box_domain(2, 1);
        let s = assemble(d.clone(), 0.5).unwrap();
        assert_eq!(s.dimension(), 9);
        let c = d.index_of(&LatticePoint::origin(2)).unwrap();
        let off: Vec<f64> = (0..9).filter(|&j| j != c).map(|j| s.entry(c, j)).filter(|&v| v != 0.0).collect();
        assert_eq!(off, vec![-1.0; 4]);
        assert_eq!(s.entry(c, c), 4.5);
        assert!(s.is_symmetric());
    }

    #[test]
    fn constant_vector_at_a_fully_interior_row_gives_the_shift() {
        let d = box_domain(2, 2);
        let lambda = 0.75;
        let s = assemble(d.clone(), lambda).unwrap();
        let ones = vec![1.0; s.dimension()];
        let mut y = vec![0.0; s.dimension()];
        s.apply(&ones, &mut y);
        let c = d.index_of(&LatticePoint::origin(2)).unwrap();
        assert_eq!(y[c], lambda);
    }

    #[test]
    fn assemble_rejects_nonpositive_shift() {
        assert!(assemble(single_point(), 0.0).is_err());
        assert!(assemble(single_point(), -1.0).is_err());
        assert!(assemble(single_point(), f64::NAN).is_err());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let d = box_domain(2, 3);
        let s = assemble(d.clone(), 2.0).unwrap();
        for backend in [Backend::Direct, Backend::ConjugateGradient] {
            let (w, _) = solve_backend(&s, &LatticeField::zeros(d.clone()), backend, LinearOptions::default()).unwrap();
            assert!(w.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_point_by_hand() {
        let d = single_point();
        let s = assemble(d.clone(), 1.0).unwrap();
        let f = LatticeField::from_interior(d, &[-5.0]).unwrap();
        for backend in [Backend::Direct, Backend::ConjugateGradient] {
            let (w, stats) = solve_backend(&s, &f, backend, LinearOptions::default()).unwrap();
            assert!((w.values()[0] - 1.0).abs() < 1e-15);
            if backend == Backend::ConjugateGradient {
                assert_eq!(stats.iterations, 1);
            }
        }
    }

    #[test]
    fn solution_satisfies_the_equation_pointwise() {
        let d = box_domain(2, 3);
        let lambda = 1.3;
        let s = assemble(d.clone(), lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_rhs(&d, &mut rng);
        let w = solve(&s, &f).unwrap();
        assert!(w.is_dirichlet_zero());
        for i in 0..d.interior_len() {
            let lhs = laplacian_at(&w, i) - lambda * w.values()[i];
            assert!((lhs - f.values()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn backends_agree() {
        let d = box_domain(2, 7);
        let s = assemble(d.clone(), 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = random_rhs(&d, &mut rng);
        let (a, _) = solve_backend(&s, &f, Backend::Direct, LinearOptions::default()).unwrap();
        let (b, stats) = solve_backend(&s, &f, Backend::ConjugateGradient, LinearOptions::default()).unwrap();
        assert!(stats.iterations >= 1);
        assert!(a.sub(&b).unwrap().sup_abs() < 1e-8);
    }

    #[test]
    fn cg_failure_reports_the_residual() {
        let d = box_domain(2, 6);
        let s = assemble(d.clone(), 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = random_rhs(&d, &mut rng);
        let opts = LinearOptions {
            tolerance: 1e-14,
            max_iterations: Some(2),
        };
        match solve_backend(&s, &f, Backend::ConjugateGradient, opts) {
            Err(Error::LinearSolve { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected a linear solve failure, got {other:?}"),
        }
    }

    #[test]
    fn positive_definite_on_random_vectors() {
        let d = box_domain(3, 2);
        let s = assemble(d, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let v: Vec<f64> = (0..s.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(s.quadratic_form(&v) > 0.0);
        }
    }

    #[test]
    fn nonnegative_source_gives_nonpositive_solution() {
        let d = box_domain(2, 5);
        let s = assemble(d.clone(), 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10 {
            let v: Vec<f64> = (0..d.interior_len()).map(|_| rng.gen_range(0.0..3.0)).collect();
            let f = LatticeField::from_interior(d.clone(), &v).unwrap();
            let (w, _) = solve_backend(&s, &f, Backend::Direct, LinearOptions::default()).unwrap();
            assert!(w.max_value() <= 0.0);
        }
    }

    #[test]
    fn coo_dump_lists_every_nonzero() {
        let s = assemble(box_domain(2, 1), 1.0).unwrap();
        let mut buf = Vec::new();
        s.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), s.nnz());
        let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[1], "0");
        assert_eq!(first[2].parse::<f64>().unwrap(), 5.0);
    }

    #[test]
    fn variable_shift_matches_uniform_when_constant() {
        let d = box_domain(2, 2);
        let a = assemble(d.clone(), 0.7).unwrap();
        let b = ShiftedLaplacianSystem::assemble_variable(d.clone(), vec![0.7; d.interior_len()]).unwrap();
        assert!(a.triplets().eq(b.triplets()));
        assert!(ShiftedLaplacianSystem::assemble_variable(d.clone(), vec![0.0; d.interior_len()]).is_err());
    }

    #[test]
    fn backend_parses() {
        assert_eq!("direct".parse::<Backend>().unwrap(), Backend::Direct);
        assert_eq!("cg".parse::<Backend>().unwrap(), Backend::ConjugateGradient);
        assert!("lu".parse::<Backend>().is_err());
    }
}
