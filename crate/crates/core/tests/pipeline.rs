use std::sync::Arc;

use lattice_vortex::calculus::{lq_norm, Region};
use lattice_vortex::exhaustion::{decay_profile, verify_global_negativity};
use lattice_vortex::oracle::newton_solve;
use lattice_vortex::{
    run_exhaustion, solve_domain, ExhaustionOptions, ExhaustionSchedule, LatticeDomain, LatticeField,
    LatticePoint, ModelParams, Shape, VortexConfig,
};

fn box3() -> Arc<LatticeDomain> {
    Arc::new(LatticeDomain::cube(2, 3, &LatticePoint::origin(2)).unwrap())
}

fn compare_with_oracle(params: &ModelParams) -> LatticeField {
    let domain = box3();
    let vortices = VortexConfig::single(LatticePoint::origin(2), 1).unwrap();
    let sol = solve_domain(domain.clone(), &vortices, params).unwrap();
    assert!(sol.residual_inf() < 1e-8);
    assert!(sol.field.get(&LatticePoint::origin(2)).unwrap() < 0.0);
    let newton = newton_solve(domain.clone(), &vortices, params, &LatticeField::zeros(domain)).unwrap();
    let gap = sol.field.sub(&newton.field).unwrap().sup_abs();
    assert!(gap < 1e-7, "gap {gap}");
    sol.field
}

#[test]
fn small_box_p0_matches_newton() {
    compare_with_oracle(&ModelParams::new(1.0, 0).with_shift(4.1));
}

#[test]
fn small_box_p1_matches_newton() {
    let u = compare_with_oracle(&ModelParams::new(1.0, 1).with_shift(8.1));
    let l4 = lq_norm(&u, 4.0, Region::Interior).unwrap();
    assert!(l4.is_finite() && l4 > 0.0);
}

#[test]
fn converged_solution_peaks_at_the_vortex() {
    let domain = box3();
    let vortices = VortexConfig::single(LatticePoint::origin(2), 2).unwrap();
    let sol = solve_domain(domain, &vortices, &ModelParams::new(2.0, 0)).unwrap();
    assert!(verify_global_negativity(&sol.field));
    let profile = decay_profile(&sol.field, &LatticePoint::origin(2)).unwrap();
    let origin = sol.field.get(&LatticePoint::origin(2)).unwrap();
    assert_eq!(profile[0], (0, origin.abs()));
    assert_eq!(profile[0].1, sol.field.sup_abs());
}

fn schedule(dimension: usize, radii: Vec<u64>) -> ExhaustionSchedule {
    ExhaustionSchedule {
        dimension,
        shape: Shape::Box,
        radii,
        center: LatticePoint::origin(dimension),
        vortices: VortexConfig::single(LatticePoint::origin(dimension), 1).unwrap(),
    }
}

#[test]
fn planar_exhaustion_decays() {
    let est = run_exhaustion(&schedule(2, vec![4, 8, 16, 32]), &ModelParams::new(1.0, 0), &ExhaustionOptions::default())
        .unwrap();
    assert!(est.certificate.certified(), "{:?}", est.certificate);
    assert!(est.inter_domain_gaps.windows(2).all(|w| w[1] < w[0]));
    assert!(est.outer_shell_sup < 1e-3);
}

#[test]
fn spatial_exhaustion_decays_faster() {
    let planar = run_exhaustion(&schedule(2, vec![3, 6, 12]), &ModelParams::new(1.0, 0), &ExhaustionOptions::default())
        .unwrap();
    let spatial = run_exhaustion(&schedule(3, vec![3, 6, 12]), &ModelParams::new(1.0, 0), &ExhaustionOptions::default())
        .unwrap();
    assert!(spatial.certificate.all_converged);
    assert!(spatial.certificate.gaps_decreasing);
    assert!(spatial.certificate.tail_monotone);
    // Compare the decay at a shell inside both finest domains.
    let at = |est: &lattice_vortex::GlobalSolutionEstimate| est.decay_profile()[8].1;
    assert!(at(&spatial) < at(&planar), "{} vs {}", at(&spatial), at(&planar));
}
