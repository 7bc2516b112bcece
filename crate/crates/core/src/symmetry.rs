//! Two-sided translations of density operators.
//!
//! A pair `(a+, a-)` translates the ket by `a-` and the bra by `a+`; in the
//! coordinates `x = (x+ + x-)/2`, `x_d = x+ - x-` this is
//! `rho(x, x_d) -> rho(x - (a+ + a-)/2, x_d - (a+ - a-))`. Diagonal shifts
//! (`a+ = a-`) commute with every translation-invariant generator; the
//! others survive only for closed dynamics.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::domain::{DensityOperatorGrid, Grid, PhysicalParams};
use crate::error::{Error, Result};
use crate::integrator::{evolve_rho_numeric, IntegratorConfig};

/// Relative defect below which a shift is counted as a symmetry.
pub const SYMMETRY_NOISE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedShift {
    pub a_plus: f64,
    pub a_minus: f64,
}

impl TwoSidedShift {
    pub fn new(a_plus: f64, a_minus: f64) -> Self {
        Self { a_plus, a_minus }
    }

    pub fn diagonal(a: f64) -> Self {
        Self::new(a, a)
    }

    /// Pure `x_d` translation by `a`.
    pub fn antidiagonal(a: f64) -> Self {
        Self::new(a / 2.0, -a / 2.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.a_plus == self.a_minus
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self::new(self.a_plus + other.a_plus, self.a_minus + other.a_minus)
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.a_plus, -self.a_minus)
    }

    /// `(shift of x, shift of x_d)`.
    pub fn coordinate_shifts(&self) -> (f64, f64) {
        (0.5 * (self.a_plus + self.a_minus), self.a_plus - self.a_minus)
    }
}

/// Translates every lane along `axis` by `a` (periodically).
fn shift_axis(values: &Array2<Complex64>, axis: Axis, grid: &Grid, a: f64) -> Array2<Complex64> {
    if a == 0.0 {
        return values.clone();
    }
    let n = grid.n;
    let steps = a / grid.spacing();
    let lanes: Vec<Vec<Complex64>> = if (steps - steps.round()).abs() < 1e-12 {
        let s = (steps.round() as i64).rem_euclid(n as i64) as usize;
        values
            .lanes(axis)
            .into_iter()
            .map(|lane| (0..n).map(|j| lane[(j + n - s) % n]).collect())
            .collect()
    } else {
        let mut planner = FftPlanner::new();
        let (fwd, inv) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
        let phases: Vec<Complex64> = grid
            .wavenumbers()
            .into_iter()
            .map(|q| Complex64::from_polar(1.0 / n as f64, -q * a))
            .collect();
        values
            .lanes(axis)
            .into_iter()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|lane| {
                let mut buf = lane.to_vec();
                fwd.process(&mut buf);
                buf.iter_mut().zip(&phases).for_each(|(z, p)| *z *= p);
                inv.process(&mut buf);
                buf
            })
            .collect()
    };
    let mut out = Array2::zeros(values.raw_dim());
    for (mut target, src) in out.lanes_mut(axis).into_iter().zip(lanes) {
        target.iter_mut().zip(src).for_each(|(t, s)| *t = s);
    }
    out
}

/// `rho(x, x_d) -> rho(x - (a+ + a-)/2, x_d - (a+ - a-))`, periodic on both
/// axes. Multiples of the spacing are exact index rolls; other shifts use
/// Fourier phases.
pub fn two_sided_shift(rho: &DensityOperatorGrid, s: TwoSidedShift) -> Result<DensityOperatorGrid> {
    if rho.values.dim() != (rho.x_grid.n, rho.xd_grid.n) {
        return Err(Error::GridMismatch("values do not match the grids".into()));
    }
    if !(s.a_plus.is_finite() && s.a_minus.is_finite()) {
        return Err(Error::NonFinite { name: "shift" });
    }
    let (dx, dd) = s.coordinate_shifts();
    let values = shift_axis(&rho.values, Axis(0), &rho.x_grid, dx);
    let values = shift_axis(&values, Axis(1), &rho.xd_grid, dd);
    DensityOperatorGrid::new(rho.x_grid, rho.xd_grid, values, rho.t)
}

/// `||evolve(shift(rho)) - shift(evolve(rho))|| / ||rho||` with the
/// numerical oracle.
pub fn commutation_defect(
    p: &PhysicalParams,
    rho: &DensityOperatorGrid,
    s: TwoSidedShift,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let first = evolve_rho_numeric(&two_sided_shift(rho, s)?, p, t, cfg)?;
    let second = two_sided_shift(&evolve_rho_numeric(rho, p, t, cfg)?, s)?;
    let diff: f64 = first
        .values
        .iter()
        .zip(second.values.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = rho.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(diff / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryClass {
    /// Bra and ket translate independently.
    #[serde(rename = "full G⊗G")]
    FullTwoSided,
    /// Only `a+ = a-` commutes with the evolution.
    #[serde(rename = "diagonal only")]
    DiagonalOnly,
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SymmetryClass::FullTwoSided => "full G⊗G",
            SymmetryClass::DiagonalOnly => "diagonal only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectSample {
    pub a_plus: f64,
    pub a_minus: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub classification: SymmetryClass,
    /// Generator terms with explicit `x_d` dependence that are present.
    pub breaking_terms: Vec<String>,
    pub defects: Vec<DefectSample>,
    /// Whether the sampled defects agree with the classification; `None`
    /// before any sample is taken.
    pub consistent: Option<bool>,
    pub params: PhysicalParams,
    pub fingerprint: String,
}

/// Generator terms that carry `x_d` explicitly.
pub fn breaking_terms(p: &PhysicalParams) -> Vec<String> {
    let mut terms = Vec::new();
    if p.f != 0.0 {
        terms.push("force f x_d".to_string());
    }
    if p.damping_coefficient() != 0.0 {
        terms.push("damping x_d^2".to_string());
    }
    if p.d2 * p.nu / p.m - p.xi != 0.0 {
        terms.push("cross x_d d/dx".to_string());
    }
    if p.nu != 0.0 {
        terms.push("friction x_d d/dx_d".to_string());
    }
    terms
}

/// Classifies by term inspection: the two-sided group survives iff
/// `f = nu = xi = d0 = 0`.
pub fn classify_symmetry(p: &PhysicalParams) -> SymmetryReport {
    let full = p.f == 0.0 && p.nu == 0.0 && p.xi == 0.0 && p.d0 == 0.0;
    SymmetryReport {
        classification: if full {
            SymmetryClass::FullTwoSided
        } else {
            SymmetryClass::DiagonalOnly
        },
        breaking_terms: breaking_terms(p),
        defects: Vec::new(),
        consistent: None,
        params: *p,
        fingerprint: p.fingerprint(),
    }
}

/// [`classify_symmetry`] plus sampled commutation defects. The result is
/// consistent when diagonal shifts stay below [`SYMMETRY_NOISE_FLOOR`] and
/// other shifts do too exactly for the full class.
pub fn classify_symmetry_checked(
    p: &PhysicalParams,
    rho: &DensityOperatorGrid,
    shifts: &[TwoSidedShift],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<SymmetryReport> {
    let mut report = classify_symmetry(p);
    report.defects = shifts
        .iter()
        .map(|s| {
            Ok(DefectSample {
                a_plus: s.a_plus,
                a_minus: s.a_minus,
                t,
                value: commutation_defect(p, rho, *s, t, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let full = report.classification == SymmetryClass::FullTwoSided;
    report.consistent = Some(report.defects.iter().all(|d| {
        let below = d.value < SYMMETRY_NOISE_FLOOR;
        if d.a_plus == d.a_minus || full {
            below
        } else {
            !below
        }
    }));
    Ok(report)
}
