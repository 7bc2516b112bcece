mod common;

use common::*;
use opencomp_core::integrator::{evolve_chi_numeric, pde_residual, Boundary, Stencil};
use opencomp_core::propagator::{coefficients, evolve_component, CoefficientFormula};
use opencomp_core::{ElementaryComponent, GaussianPoly, Grid, IntegratorConfig, PhysicalParams, Profile, WaveVector};
use num_complex::Complex64;

#[test]
fn closed_form_matches_oracle_for_real_and_imaginary_q() {
    for f in [0.0, 1.0] {
        let p = reference().with_force(f);
        for q in [WaveVector::real(0.0), WaveVector::real(1.0), WaveVector::imaginary(1.0)] {
            let diff = oracle_difference(&p, q, &gaussian(1.0, 0.0, 0.0), &schedule(3.0, 6));
            assert!(diff < 1e-6, "f={f} q={:?}: {diff:e}", q.value());
        }
    }
}

#[test]
fn oracle_with_xi_and_offcenter_profile() {
    let p = PhysicalParams {
        xi: 0.2,
        d2: 1.2,
        ..reference()
    };
    let chi = gaussian(0.8, 0.5, 0.7);
    let diff = oracle_difference(&p, WaveVector::real(-0.7), &chi, &schedule(2.0, 4));
    assert!(diff < 1e-6, "{diff:e}");
}

#[test]
fn homogeneous_component_keeps_origin_value() {
    let grid = oracle_grid();
    let p = reference();
    let chi = gaussian(1.0, 0.0, 0.0).samples(&grid).unwrap();
    let cfg = oracle_config(&p, 0.0.into(), &grid);
    let out = evolve_chi_numeric(&chi, &grid, &p, 0.0.into(), 2.0, &cfg).unwrap();
    let z = grid.zero_index();
    assert!((out[z] - chi[z]).norm() < 1e-10);
}

fn fd4_error(dt: f64) -> Vec<Complex64> {
    let grid = Grid::new(128, 24.0).unwrap();
    let p = reference();
    let chi = gaussian(1.0, 0.0, 0.0).samples(&grid).unwrap();
    let cfg = IntegratorConfig {
        dt,
        stencil: Stencil::Order4,
        boundary: Boundary::ClampedDecay,
        ..IntegratorConfig::default()
    };
    evolve_chi_numeric(&chi, &grid, &p, 1.0.into(), 0.5, &cfg).unwrap()
}

#[test]
fn time_stepping_is_fourth_order() {
    let dt = 0.004;
    let (a, b, c) = (fd4_error(dt), fd4_error(dt / 2.0), fd4_error(dt / 4.0));
    let e1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let e2: f64 = b.iter().zip(&c).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let ratio = e1 / e2;
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

fn residual(p: &PhysicalParams, formula: CoefficientFormula, n: usize, h_t: f64) -> f64 {
    let grid = Grid::new(n, 24.0).unwrap();
    let q = WaveVector::real(1.0);
    let chi = GaussianPoly::gaussian(Complex64::new(1.0, 0.0), 0.0, 1.0, 0.0);
    let eval = |t: f64, x: f64| {
        let c = coefficients(p, q, t, formula).unwrap();
        let arg = x * c.contraction + c.shift;
        chi.eval(arg) * (c.a + Complex64::i() * c.k * x - c.width * x * x).exp()
    };
    let cfg = IntegratorConfig {
        stencil: Stencil::Order4,
        ..IntegratorConfig::default()
    };
    pde_residual(p, q, eval, &[0.3, 0.8, 1.5], &grid, h_t, &cfg).unwrap()
}

#[test]
fn residual_converges_and_legacy_xi_term_does_not() {
    let p = PhysicalParams {
        xi: 0.2,
        ..reference()
    };
    let coarse = residual(&p, CoefficientFormula::Rederived, 128, 1e-3);
    let fine = residual(&p, CoefficientFormula::Rederived, 256, 1e-3);
    assert!(coarse / fine > 12.0, "spacing order {}", (coarse / fine).log2());
    let bad = residual(&p, CoefficientFormula::Legacy, 256, 1e-3);
    let bad_fine = residual(&p, CoefficientFormula::Legacy, 512, 5e-4);
    assert!(bad > 1e-2 && bad_fine > 1e-2, "{bad} {bad_fine}");
}

#[test]
fn semigroup_property() {
    let p = PhysicalParams {
        xi: 0.1,
        ..reference().with_force(0.4)
    };
    let c = ElementaryComponent::new(WaveVector::new(0.8, 0.3), gaussian(1.2, 0.3, -0.4));
    let grid = Grid::new(64, 12.0).unwrap();
    let two_step = evolve_component(&evolve_component(&c, &p, 0.7).unwrap(), &p, 1.1).unwrap();
    let one_step = evolve_component(&c, &p, 1.8).unwrap();
    let a = two_step.chi.samples(&grid).unwrap();
    let b = one_step.chi.samples(&grid).unwrap();
    assert!(relative_l2(&a, &b) < 1e-10);
    assert_eq!(two_step.q, c.q);
    let _ = Profile::Analytic(GaussianPoly::constant(Complex64::new(1.0, 0.0)));
}
