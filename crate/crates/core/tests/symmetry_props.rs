use num_complex::Complex64;
use opencomp_core::symmetry::{classify_symmetry_checked, commutation_defect, two_sided_shift};
use opencomp_core::{DensityOperatorGrid, Grid, IntegratorConfig, PhysicalParams, SymmetryClass, TwoSidedShift};
use proptest::prelude::*;

fn unit_state() -> DensityOperatorGrid {
    let g = Grid::new(80, 20.0).unwrap();
    DensityOperatorGrid::from_fn(g, g, |x, d| Complex64::new((-(x * x) / 2.0 - d * d / 2.0).exp(), 0.0))
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::spectral(2e-3)
}

#[test]
fn closed_dynamics_commutes_with_both_shifts() {
    let p = PhysicalParams::default();
    let rho = unit_state();
    for s in [TwoSidedShift::diagonal(1.0), TwoSidedShift::antidiagonal(1.0), TwoSidedShift::new(0.75, -0.5)] {
        let d = commutation_defect(&p, &rho, s, 0.5, &cfg()).unwrap();
        assert!(d < 1e-8, "{s:?}: {d:e}");
    }
}

#[test]
fn open_dynamics_keeps_only_the_diagonal() {
    let rho = unit_state();
    let p = PhysicalParams {
        d0: 1.0,
        ..PhysicalParams::default()
    };
    let diag = commutation_defect(&p, &rho, TwoSidedShift::diagonal(1.0), 1.0, &cfg()).unwrap();
    let anti = commutation_defect(&p, &rho, TwoSidedShift::antidiagonal(1.0), 1.0, &cfg()).unwrap();
    assert!(diag < 1e-8 && anti > 1e-3, "{diag:e} {anti:e}");
    let report = classify_symmetry_checked(
        &p,
        &rho,
        &[TwoSidedShift::diagonal(1.0), TwoSidedShift::antidiagonal(1.0)],
        1.0,
        &cfg(),
    )
    .unwrap();
    assert_eq!(report.classification, SymmetryClass::DiagonalOnly);
    assert_eq!(report.consistent, Some(true));
}

#[test]
fn antidiagonal_defect_grows_with_decoherence() {
    let rho = unit_state();
    let defects: Vec<f64> = [0.0, 0.1, 0.2, 0.4, 0.8]
        .into_iter()
        .map(|d0| {
            let p = PhysicalParams {
                d0,
                ..PhysicalParams::default()
            };
            commutation_defect(&p, &rho, TwoSidedShift::antidiagonal(1.0), 0.5, &cfg()).unwrap()
        })
        .collect();
    assert!(defects[0] < 1e-8);
    assert!(defects.windows(2).all(|w| w[1] > w[0]), "{defects:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn shifts_form_a_group_action(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64) {
        let rho = unit_state();
        let (s1, s2) = (TwoSidedShift::new(a, b), TwoSidedShift::new(c, d));
        let lhs = two_sided_shift(&two_sided_shift(&rho, s1).unwrap(), s2).unwrap();
        let rhs = two_sided_shift(&rho, s1.compose(&s2)).unwrap();
        prop_assert!(lhs.relative_l2(&rhs).unwrap() < 1e-12);
        let back = two_sided_shift(&two_sided_shift(&rho, s1).unwrap(), s1.inverse()).unwrap();
        prop_assert!(back.relative_l2(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn diagonal_shifts_commute_for_every_generator(
        nu in 0.0..1.0f64, d0 in 0.0..1.0f64, d2 in 0.0..1.0f64, xi in -0.3..0.3f64, f in -1.0..1.0f64, a in -1.0..1.0f64,
    ) {
        let p = PhysicalParams { nu, d0, d2, xi, f, ..PhysicalParams::default() };
        let d = commutation_defect(&p, &unit_state(), TwoSidedShift::diagonal(a), 0.2, &cfg()).unwrap();
        prop_assert!(d < 1e-8, "{d:e}");
    }
}
