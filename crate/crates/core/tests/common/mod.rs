#![allow(dead_code)]

use num_complex::Complex64;
use opencomp_core::integrator::evolve_chi_snapshots;
use opencomp_core::propagator::evolve_component;
use opencomp_core::{ElementaryComponent, GaussianPoly, Grid, IntegratorConfig, PhysicalParams, Profile, WaveVector};

pub fn reference() -> PhysicalParams {
    PhysicalParams::reference()
}

pub fn gaussian(sigma: f64, center: f64, k0: f64) -> Profile {
    Profile::Analytic(GaussianPoly::gaussian(Complex64::new(1.0, 0.0), center, sigma, k0))
}

pub fn oracle_grid() -> Grid {
    Grid::new(128, 28.0).unwrap()
}

pub fn oracle_config(p: &PhysicalParams, q: WaveVector, grid: &Grid) -> IntegratorConfig {
    let cfg = IntegratorConfig::spectral(1.0);
    let bound = opencomp_core::integrator::chi_stability_bound(p, q, grid, &cfg);
    cfg.with_dt(bound.min(0.01))
}

pub fn relative_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Largest relative L2 distance between the closed form and the oracle over
/// `times`.
pub fn oracle_difference(p: &PhysicalParams, q: WaveVector, chi: &Profile, times: &[f64]) -> f64 {
    let grid = oracle_grid();
    let cfg = oracle_config(p, q, &grid);
    let initial = chi.samples(&grid).unwrap();
    let numeric = evolve_chi_snapshots(&initial, &grid, p, q, times, &cfg).unwrap();
    let component = ElementaryComponent::new(q, chi.clone());
    times
        .iter()
        .zip(numeric)
        .map(|(&t, num)| {
            let exact = evolve_component(&component, p, t).unwrap().chi.samples(&grid).unwrap();
            relative_l2(&num, &exact)
        })
        .fold(0.0, f64::max)
}

pub fn schedule(t_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| t_max * i as f64 / n as f64).collect()
}
