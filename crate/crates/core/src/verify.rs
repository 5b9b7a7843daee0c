//! Randomized property suites: maximum principle, Green's identity, the
//! interpolation ratio, oracle equivalence and the monotone chain.
//!
//! Each suite draws from its own generator seeded from the run seed and the
//! suite, so results do not depend on the order suites are executed in.

use std::fmt;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::calculus::{
    gns_ratio, green_identity_defect_with, laplacian_at, lq_norm, LatticeField, Region,
};
use crate::chern_simons::{
    max_principle_check_with, solve_domain, ModelParams, Vortex, VortexConfig, ENERGY_SLACK,
    MONOTONICITY_SLACK,
};
use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, LatticePoint};
use crate::linsolve::{Backend, LinearOptions, LinearSolver, ShiftedLaplacianSystem};
use crate::oracle::newton_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    MaximumPrinciple,
    GreenIdentity,
    GnsRatio,
    OracleEquivalence,
    MonotoneChain,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::MaximumPrinciple,
        Suite::GreenIdentity,
        Suite::GnsRatio,
        Suite::OracleEquivalence,
        Suite::MonotoneChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MaximumPrinciple => "maximum-principle",
            Suite::GreenIdentity => "green-identity",
            Suite::GnsRatio => "gns-ratio",
            Suite::OracleEquivalence => "oracle-equivalence",
            Suite::MonotoneChain => "monotone-chain",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Suite::MaximumPrinciple => 0x6d70,
            Suite::GreenIdentity => 0x6772,
            Suite::GnsRatio => 0x676e,
            Suite::OracleEquivalence => 0x6f72,
            Suite::MonotoneChain => 0x6d63,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Box half-widths used by the size-dependent suites.
    pub sizes: Vec<u64>,
    /// Replace the Laplacian used by the checks with a broken one.
    pub corrupt_laplacian: bool,
}

impl VerifyOptions {
    pub fn new(seed: u64, sizes: Vec<u64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidInput("at least one size is required".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidInput("sizes must be positive".into()));
        }
        Ok(VerifyOptions {
            seed,
            sizes,
            corrupt_laplacian: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub passed: bool,
    pub cases: usize,
    /// Worst value of the suite's measured quantity.
    pub worst: f64,
    pub detail: String,
}

fn box_domain(n: usize, half: u64) -> Arc<LatticeDomain> {
    Arc::new(LatticeDomain::cube(n, half, &LatticePoint::origin(n)).expect("valid box"))
}

fn laplacian_for(corrupt: bool) -> impl Fn(&LatticeField, usize) -> f64 {
    move |u: &LatticeField, i: usize| {
        let lap = laplacian_at(u, i);
        if corrupt {
            // Drop the first neighbour from the stencil.
            let j = u.domain().interior_neighbors(i).next().expect("2n neighbours");
            lap - (u.values()[j] - u.values()[i])
        } else {
            lap
        }
    }
}

/// An instance satisfying the maximum principle's hypotheses: random
/// `g > 0`, boundary data `≤ 0`, and `f` solving `(Δ - g) f = s` with a
/// random `s ≥ 0`.
pub fn max_principle_instance(
    domain: &Arc<LatticeDomain>,
    rng: &mut impl Rng,
) -> Result<(LatticeField, LatticeField)> {
    let g = LatticeField::from_fn(domain.clone(), |_| rng.gen_range(0.05..3.0));
    let interior = domain.interior_len();
    let source: Vec<f64> = (0..interior)
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..5.0) })
        .collect();
    let boundary: Vec<f64> = (0..domain.boundary().len())
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { -rng.gen_range(0.0..2.0) })
        .collect();

    let system = ShiftedLaplacianSystem::assemble_variable(domain.clone(), g.interior_values().to_vec())?;
    let solver = LinearSolver::new(Arc::new(system), Backend::Direct, LinearOptions::default())?;
    // (Δ - g) f = s on Ω with f = b on δΩ: move boundary terms to the right.
    let mut rhs = source.clone();
    for (i, r) in rhs.iter_mut().enumerate() {
        for j in domain.interior_neighbors(i) {
            if j >= interior {
                *r -= boundary[j - interior];
            }
        }
    }
    let (w, _) = solver.solve_interior(&rhs, None)?;
    let mut values = w;
    values.extend_from_slice(&boundary);
    Ok((LatticeField::from_values(domain.clone(), values)?, g))
}

fn suite_maximum_principle(opts: &VerifyOptions, rng: &mut StdRng) -> SuiteResult {
    let lap = laplacian_for(opts.corrupt_laplacian);
    let mut cases = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for k in 0..100 {
        let half = opts.sizes[k % opts.sizes.len()];
        let n = if k % 10 == 9 { 3 } else { 2 };
        let domain = box_domain(n, if n == 3 { half.min(4) } else { half });
        cases += 1;
        let outcome = max_principle_instance(&domain, rng)
            .and_then(|(f, g)| {
                worst = worst.max(f.max_value());
                max_principle_check_with(&f, &g, &lap)
            });
        match outcome {
            Ok(true) => {}
            Ok(false) => failures.push(format!("case {k}: f > 0 somewhere")),
            Err(e) => failures.push(format!("case {k}: {e}")),
        }
    }
    SuiteResult {
        suite: Suite::MaximumPrinciple,
        passed: failures.is_empty(),
        cases,
        worst,
        detail: failures.into_iter().next().unwrap_or_else(|| "max f ≤ 1e-12".into()),
    }
}

fn suite_green_identity(opts: &VerifyOptions, rng: &mut StdRng) -> SuiteResult {
    let lap = laplacian_for(opts.corrupt_laplacian);
    let mut domains: Vec<Arc<LatticeDomain>> = opts.sizes.iter().map(|&s| box_domain(2, s)).collect();
    domains.push(box_domain(3, opts.sizes[0].min(4)));
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in &domains {
        for _ in 0..100 {
            let u = LatticeField::from_fn(d.clone(), |_| rng.gen_range(-1.0..1.0));
            let v_int: Vec<f64> = (0..d.interior_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = LatticeField::from_interior(d.clone(), &v_int).expect("interior length");
            let defect = green_identity_defect_with(&u, &v, &lap).unwrap_or(f64::INFINITY);
            worst = worst.max(defect);
            cases += 1;
        }
    }
    SuiteResult {
        suite: Suite::GreenIdentity,
        passed: worst < 1e-10,
        cases,
        worst,
        detail: format!("max defect {worst:.3e} (threshold 1e-10)"),
    }
}

fn suite_gns_ratio(opts: &VerifyOptions, rng: &mut StdRng) -> SuiteResult {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [2usize, 3] {
        let domain = box_domain(n, if n == 2 { opts.sizes[0].min(8) } else { opts.sizes[0].min(3) });
        for p in 0..3u32 {
            let mut max_ratio = 0.0f64;
            for _ in 0..1000 {
                // Mix dense noise and sparse spikes so both regimes are sampled.
                let density = rng.gen_range(0.05..1.0);
                let mut vals: Vec<f64> = (0..domain.interior_len())
                    .map(|_| if rng.gen_bool(density) { rng.gen_range(-2.0..2.0) } else { 0.0 })
                    .collect();
                if vals.iter().all(|&v| v == 0.0) {
                    vals[0] = 1.0;
                }
                let u = LatticeField::from_interior(domain.clone(), &vals).expect("interior length");
                cases += 1;
                let ratio = gns_ratio(&u, p).unwrap_or(f64::NAN);
                let pf = p as f64;
                let top = lq_norm(&u, 4.0 * pf + 4.0, Region::Closure).unwrap_or(f64::NAN);
                let mid = lq_norm(&u, 2.0 * n as f64 * (pf + 1.0) / (n as f64 - 1.0), Region::Closure)
                    .unwrap_or(f64::NAN);
                if !(ratio.is_finite() && ratio > 0.0) || !(top <= mid * (1.0 + 1e-12)) {
                    ok = false;
                }
                max_ratio = max_ratio.max(ratio);
            }
            worst = worst.max(max_ratio);
            detail.push(format!("n={n} p={p}: max {max_ratio:.4}"));
        }
    }
    SuiteResult {
        suite: Suite::GnsRatio,
        passed: ok && worst.is_finite(),
        cases,
        worst,
        detail: detail.join("; "),
    }
}

/// Random model parameters and vortices inside a box of half-width `half`.
pub fn random_instance(
    n: usize,
    half: u64,
    rng: &mut impl Rng,
) -> (ModelParams, VortexConfig) {
    let params = ModelParams::new(rng.gen_range(0.5..4.0), rng.gen_range(0..3));
    let count = rng.gen_range(1..=3);
    let mut vortices: Vec<Vortex> = Vec::new();
    let h = half as i64;
    while vortices.len() < count {
        let point = LatticePoint::new((0..n).map(|_| rng.gen_range(-h..=h)).collect());
        if vortices.iter().all(|v| v.point != point) {
            vortices.push(Vortex {
                point,
                multiplicity: rng.gen_range(1..=3),
            });
        }
    }
    (params, VortexConfig::new(vortices).expect("distinct vortices"))
}

fn suite_oracle(_opts: &VerifyOptions, rng: &mut StdRng) -> SuiteResult {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let cases = 10;
    for k in 0..cases {
        let (n, half) = if k % 3 == 2 { (3, rng.gen_range(1..=2)) } else { (2, rng.gen_range(2..=6)) };
        let domain = box_domain(n, half);
        let (params, vortices) = random_instance(n, half, rng);
        let outcome = solve_domain(domain.clone(), &vortices, &params).and_then(|scheme| {
            let newton = newton_solve(domain.clone(), &vortices, &params, &LatticeField::zeros(domain.clone()))?;
            scheme.field.sub(&newton.field).map(|d| d.sup_abs())
        });
        match outcome {
            Ok(gap) => {
                worst = worst.max(gap);
                if gap >= 1e-7 {
                    failures.push(format!("case {k}: gap {gap:.3e}"));
                }
            }
            Err(e) => failures.push(format!("case {k}: {e}")),
        }
    }
    SuiteResult {
        suite: Suite::OracleEquivalence,
        passed: failures.is_empty(),
        cases,
        worst,
        detail: failures
            .into_iter()
            .next()
            .unwrap_or_else(|| format!("max gap {worst:.3e} (threshold 1e-7)")),
    }
}

fn suite_monotone(opts: &VerifyOptions, rng: &mut StdRng) -> SuiteResult {
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let cases = 2 * opts.sizes.len();
    for k in 0..cases {
        let half = opts.sizes[k % opts.sizes.len()];
        let n = if k % 2 == 1 { 3 } else { 2 };
        let half = if n == 3 { half.min(4) } else { half };
        let domain = box_domain(n, half);
        let (params, vortices) = random_instance(n, half, rng);
        match solve_domain(domain, &vortices, &params) {
            Ok(sol) => {
                for r in &sol.trace.records {
                    worst = worst.max(r.max_increase);
                    if r.max_increase > MONOTONICITY_SLACK || r.energy_margin < -ENERGY_SLACK {
                        failures.push(format!("case {k}, step {}", r.k));
                        break;
                    }
                }
            }
            Err(e) => failures.push(format!("case {k}: {e}")),
        }
    }
    SuiteResult {
        suite: Suite::MonotoneChain,
        passed: failures.is_empty(),
        cases,
        worst,
        detail: failures
            .into_iter()
            .next()
            .unwrap_or_else(|| format!("max increase {worst:.3e}")),
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> SuiteResult {
    let mut rng = StdRng::seed_from_u64(opts.seed ^ suite.salt().wrapping_mul(0x9e37_79b9_7f4a_7c15));
    match suite {
        Suite::MaximumPrinciple => suite_maximum_principle(opts, &mut rng),
        Suite::GreenIdentity => suite_green_identity(opts, &mut rng),
        Suite::GnsRatio => suite_gns_ratio(opts, &mut rng),
        Suite::OracleEquivalence => suite_oracle(opts, &mut rng),
        Suite::MonotoneChain => suite_monotone(opts, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sizes_are_rejected() {
        assert!(VerifyOptions::new(1, vec![]).is_err());
        assert!(VerifyOptions::new(1, vec![0]).is_err());
    }

    #[test]
    fn instance_satisfies_the_hypotheses() {
        let d = box_domain(2, 4);
        let mut rng = StdRng::seed_from_u64(3);
        let (f, g) = max_principle_instance(&d, &mut rng).unwrap();
        assert!(crate::chern_simons::max_principle_check(&f, &g).unwrap());
    }

    #[test]
    fn green_suite_catches_the_corrupted_laplacian() {
        let mut opts = VerifyOptions::new(5, vec![2]).unwrap();
        assert!(run_suite(Suite::GreenIdentity, &opts).passed);
        opts.corrupt_laplacian = true;
        assert!(!run_suite(Suite::GreenIdentity, &opts).passed);
    }

    #[test]
    fn suites_are_deterministic() {
        let opts = VerifyOptions::new(17, vec![2, 3]).unwrap();
        assert_eq!(run_suite(Suite::GnsRatio, &opts), run_suite(Suite::GnsRatio, &opts));
    }
}
