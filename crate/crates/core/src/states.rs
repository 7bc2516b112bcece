//! Generic states as superpositions of elementary components.
//!
//! A state on the `(x, x_d)` grid is stored by its Fourier content in `x`:
//!
//! ```text
//! rho(x_j, x_d)  = (1/L) sum_n exp(i q_n x_j) chi_n(x_d)
//! chi_n(x_d)     = h sum_j exp(-i q_n x_j) rho(x_j, x_d)
//! ```
//!
//! with `q_n` the FFT-conjugate wave numbers of the `x` grid, which is the
//! grid transcription of `rho = int dq/2pi exp(i q x) chi_q(x_d)`.

use std::io::Write;

use log::warn;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::domain::{drift_wavevector, DensityOperatorGrid, ElementaryComponent, Grid, PhysicalParams, WaveVector};
use crate::error::{Error, Result};
use crate::profile::{GaussianPoly, Profile, SampledProfile};
use crate::propagator::{apply_coefficients, coefficients, CoefficientFormula, PropagatorCoefficients};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Modes whose largest sample is below this fraction of the state maximum
/// are not propagated.
pub const NEGLIGIBLE_MODE: f64 = 1e-14;

/// Sampled profiles whose edges are below this fraction of their maximum
/// are treated as zero outside their grid.
pub const DECAYED_EDGE: f64 = 1e-10;

/// Relative tolerance for the imaginary-part and negativity warnings.
pub const WARN_TOLERANCE: f64 = 1e-8;

/// Below this `nu t` the saddle-point asymptote is not trusted.
pub const ASYMPTOTIC_NU_T: f64 = 5.0;

fn zero_profile() -> Profile {
    Profile::Analytic(GaussianPoly::constant(ZERO))
}

fn is_zero(p: &Profile) -> bool {
    matches!(p, Profile::Analytic(g) if g.poly.iter().all(|c| *c == ZERO))
}

/// `(-1)^n`: the phase of `exp(-i q_n x_j)` coming from `x_0 = -L/2`.
fn parity(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Fourier content of a state in `x`: one profile per wave number.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub x_grid: Grid,
    pub xd_grid: Grid,
    /// `modes[n]` is `chi` at `q = x_grid.wavenumbers()[n]` (FFT order).
    pub modes: Vec<Profile>,
    pub t: f64,
}

impl SpectralState {
    pub fn new(x_grid: Grid, xd_grid: Grid, modes: Vec<Profile>) -> Result<Self> {
        x_grid.check()?;
        xd_grid.check()?;
        if modes.len() != x_grid.n {
            return Err(Error::GridMismatch(format!(
                "{} modes for a {}-point x grid",
                modes.len(),
                x_grid.n
            )));
        }
        Ok(Self {
            x_grid,
            xd_grid,
            modes,
            t: 0.0,
        })
    }

    pub fn empty(x_grid: Grid, xd_grid: Grid) -> Self {
        Self {
            x_grid,
            xd_grid,
            modes: vec![zero_profile(); x_grid.n],
            t: 0.0,
        }
    }

    /// A state holding the single component `chi` at mode `index`.
    pub fn single_mode(x_grid: Grid, xd_grid: Grid, index: usize, chi: Profile) -> Result<Self> {
        if index >= x_grid.n {
            return Err(Error::GridMismatch(format!("mode {index} on a {}-point grid", x_grid.n)));
        }
        let mut s = Self::empty(x_grid, xd_grid);
        s.modes[index] = chi;
        Ok(s)
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        self.x_grid.wavenumbers()
    }

    pub fn component(&self, index: usize) -> ElementaryComponent {
        ElementaryComponent::new(self.wavenumbers()[index], self.modes[index].clone())
    }

    /// Sampled values of every mode, `(mode, x_d)`.
    pub fn mode_samples(&self) -> Result<Array2<Complex64>> {
        let mut out = Array2::zeros((self.x_grid.n, self.xd_grid.n));
        for (n, chi) in self.modes.iter().enumerate() {
            if is_zero(chi) {
                continue;
            }
            for (k, v) in chi.samples(&self.xd_grid)?.into_iter().enumerate() {
                out[[n, k]] = v;
            }
        }
        Ok(out)
    }

    /// `max |chi_{-q}(-x_d) - conj(chi_q(x_d))| / max |chi|`; zero for the
    /// spectral content of a Hermitian state.
    pub fn hermiticity_pairing_defect(&self) -> Result<f64> {
        let s = self.mode_samples()?;
        let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut defect: f64 = 0.0;
        for n in 0..self.x_grid.n {
            let pn = self.x_grid.reflect_index(n);
            for k in 0..self.xd_grid.n {
                let pk = self.xd_grid.reflect_index(k);
                defect = defect.max((s[[pn, pk]] - s[[n, k]].conj()).norm());
            }
        }
        Ok(defect / scale)
    }
}

/// Inverse transform over `q` on every `x_d` column.
pub fn synthesize(s: &SpectralState) -> Result<DensityOperatorGrid> {
    let samples = s.mode_samples()?;
    let (nx, nd) = (s.x_grid.n, s.xd_grid.n);
    let plan = FftPlanner::new().plan_fft_inverse(nx);
    let scale = 1.0 / s.x_grid.length;
    let columns: Vec<Vec<Complex64>> = (0..nd)
        .into_par_iter()
        .map(|k| {
            let mut buf: Vec<Complex64> = (0..nx).map(|n| samples[[n, k]] * parity(n) * scale).collect();
            plan.process(&mut buf);
            buf
        })
        .collect();
    let values = Array2::from_shape_fn((nx, nd), |(j, k)| columns[k][j]);
    DensityOperatorGrid::new(s.x_grid, s.xd_grid, values, s.t)
}

/// Forward transform over `x` on every `x_d` column; exact inverse of
/// [`synthesize`].
pub fn decompose(rho: &DensityOperatorGrid) -> Result<SpectralState> {
    let (nx, nd) = rho.values.dim();
    if nx != rho.x_grid.n || nd != rho.xd_grid.n {
        return Err(Error::GridMismatch("values do not match the grids".into()));
    }
    let plan = FftPlanner::new().plan_fft_forward(nx);
    let h = rho.x_grid.spacing();
    let columns: Vec<Vec<Complex64>> = (0..nd)
        .into_par_iter()
        .map(|k| {
            let mut buf: Vec<Complex64> = rho.values.column(k).to_vec();
            plan.process(&mut buf);
            buf.iter_mut().enumerate().for_each(|(n, z)| *z *= h * parity(n));
            buf
        })
        .collect();
    let modes = (0..nx)
        .map(|n| {
            let values = (0..nd).map(|k| columns[k][n]).collect();
            SampledProfile::new(rho.xd_grid, values).map(Profile::Sampled)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralState {
        x_grid: rho.x_grid,
        xd_grid: rho.xd_grid,
        modes,
        t: rho.t,
    })
}

/// Propagates a sampled profile whose characteristic argument may leave
/// the grid; a profile decayed at its edges is continued by zero.
fn propagate_sampled(s: &SampledProfile, c: &PropagatorCoefficients) -> Result<Profile> {
    if c.shift.im != 0.0 {
        return Err(Error::DomainEscape {
            re: c.shift.re,
            im: c.shift.im,
        });
    }
    let max = s.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = s.values[0].norm().max(s.values[s.values.len() - 1].norm());
    let decayed = edge <= DECAYED_EDGE * max;
    let (lo, hi) = (s.grid.first(), s.grid.last());
    let values = s
        .grid
        .coords()
        .into_iter()
        .map(|x| {
            let arg = x * c.contraction + c.shift.re;
            if (arg < lo || arg > hi) && decayed {
                return Ok(ZERO);
            }
            let source = s.eval_real(arg)?;
            Ok(source * (c.a + I * c.k * x - c.width * x * x).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile::Sampled(SampledProfile::new(s.grid, values)?))
}

/// Evolves every mode with the closed-form propagator.
///
/// Modes below [`NEGLIGIBLE_MODE`] of the largest one are dropped. Per-mode
/// failures are reported with the mode index and wave number.
pub fn evolve_state(s: &SpectralState, p: &PhysicalParams, t: f64) -> Result<SpectralState> {
    p.validate(false)?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(s.clone());
    }
    let qs = s.wavenumbers();
    let sizes = s
        .modes
        .iter()
        .map(|chi| if is_zero(chi) { Ok(0.0) } else { chi.max_abs(&s.xd_grid) })
        .collect::<Result<Vec<_>>>()?;
    let largest = sizes.iter().cloned().fold(0.0, f64::max);
    let modes = s
        .modes
        .par_iter()
        .enumerate()
        .map(|(n, chi)| {
            if sizes[n] <= NEGLIGIBLE_MODE * largest {
                return Ok(zero_profile());
            }
            let wrap = |e: Error| Error::Mode {
                index: n,
                q: qs[n],
                source: Box::new(e),
            };
            let c = coefficients(p, WaveVector::real(qs[n]), t, CoefficientFormula::Rederived).map_err(wrap)?;
            match chi {
                Profile::Analytic(_) => apply_coefficients(chi, &c),
                Profile::Sampled(sp) => propagate_sampled(sp, &c),
            }
            .map_err(wrap)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralState {
        x_grid: s.x_grid,
        xd_grid: s.xd_grid,
        modes,
        t: s.t + t,
    })
}

/// Saddle-point form of the state after a long evolution time `t`:
///
/// ```text
/// rho(x, x_d) = chi_0(0) m nu / sqrt(2 pi d0 hbar t)
///               * exp(-(x - v t)^2 m^2 nu^2 / (2 d0 hbar t) + i k_f x_d - (d/2) x_d^2)
/// ```
///
/// with `v = f / (m nu)`. At `x = 0` the spatial factor is
/// `exp(-t f^2 / (2 d0 hbar))`.
pub fn longtime_asymptote(s: &SpectralState, p: &PhysicalParams, t: f64) -> Result<DensityOperatorGrid> {
    p.validate(false)?;
    if p.d0 <= 0.0 {
        return Err(Error::ZeroDecoherence);
    }
    if t <= 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let k_f = drift_wavevector(p)?;
    if p.nu * t < ASYMPTOTIC_NU_T {
        warn!("long-time asymptote evaluated at nu t = {:.3}", p.nu * t);
    }
    let chi00 = s.modes[0].eval(ZERO)?;
    let spread = p.d0 * p.hbar * t / (p.m * p.m * p.nu * p.nu);
    let prefactor = chi00 / (std::f64::consts::TAU * spread).sqrt();
    let v = p.f / (p.m * p.nu);
    let half_d = 0.5 * p.damping_coefficient() / p.nu;
    let mut out = DensityOperatorGrid::from_fn(s.x_grid, s.xd_grid, |x, x_d| {
        let drift = x - v * t;
        prefactor * (-(drift * drift) / (2.0 * spread) + I * k_f * x_d - half_d * x_d * x_d).exp()
    });
    out.t = s.t + t;
    Ok(out)
}

/// `int dx rho(x, 0)` on the grid (the periodic trapezoidal rule).
pub fn norm(rho: &DensityOperatorGrid) -> Complex64 {
    let k0 = rho.xd_grid.zero_index();
    rho.values.column(k0).iter().sum::<Complex64>() * rho.x_grid.spacing()
}

/// Eighth-order central difference weights for the first derivative.
const D1_WEIGHTS: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// `<p> = (1/norm) int dx (-i hbar) d rho/dx_d at x_d = 0`.
pub fn momentum_expectation(rho: &DensityOperatorGrid, hbar: f64) -> Result<f64> {
    let n = norm(rho);
    if n.norm() <= f64::MIN_POSITIVE || !n.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let k0 = rho.xd_grid.zero_index();
    let h = rho.xd_grid.spacing();
    let mut integral = ZERO;
    for row in rho.values.rows() {
        let d: Complex64 = D1_WEIGHTS
            .iter()
            .enumerate()
            .map(|(i, w)| (row[k0 + i + 1] - row[k0 - i - 1]) * *w)
            .sum::<Complex64>()
            / h;
        integral += d;
    }
    let p = -I * hbar * integral * rho.x_grid.spacing() / n;
    if p.im.abs() > WARN_TOLERANCE * p.norm().max(1.0) {
        warn!("momentum expectation has imaginary part {:e}", p.im);
    }
    Ok(p.re)
}

/// `Re rho(x, 0)`; warns when the imaginary part or negative values exceed
/// [`WARN_TOLERANCE`] of the maximum.
pub fn position_density(rho: &DensityOperatorGrid) -> Vec<f64> {
    let k0 = rho.xd_grid.zero_index();
    let column = rho.values.column(k0);
    let max = column.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = WARN_TOLERANCE * max;
    let imag = column.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > tol {
        warn!("position density has imaginary part up to {imag:e}");
    }
    let negative = column.iter().map(|z| -z.re).fold(0.0, f64::max);
    if negative > tol {
        warn!("position density is negative down to {:e}", -negative);
    }
    column.iter().map(|z| z.re).collect()
}

/// `int dx dx_d rho(x, x_d) rho(x, -x_d)`, the grid form of `Tr rho^2`.
pub fn purity(rho: &DensityOperatorGrid) -> f64 {
    let g = &rho.xd_grid;
    let mut acc = ZERO;
    for row in rho.values.rows() {
        for k in 0..g.n {
            acc += row[k] * row[g.reflect_index(k)];
        }
    }
    let value = acc * rho.x_grid.spacing() * g.spacing();
    if value.im.abs() > WARN_TOLERANCE * value.norm().max(1.0) {
        warn!("purity has imaginary part {:e}", value.im);
    }
    value.re
}

/// Points with `|rho(x, x_d) / rho(x, 0)|` below this are left out of the
/// envelope fit.
const FIT_FLOOR: f64 = 1e-8;
/// Largest tolerated RMS misfit of the quadratic, relative to the spread of
/// the data.
const FIT_TOLERANCE: f64 = 1e-4;

/// Coefficient of `x_d^2` in a least-squares quadratic fit of
/// `-log |rho(x, x_d) / rho(x, 0)|` at the grid row nearest `x`.
pub fn coherence_width(rho: &DensityOperatorGrid, x: f64) -> Result<f64> {
    let row = rho.values.row(rho.x_grid.nearest_index(x));
    let center = row[rho.xd_grid.zero_index()];
    if center.norm() == 0.0 {
        return Err(Error::FitFailure("rho(x, 0) vanishes".into()));
    }
    let scale = rho.xd_grid.extent();
    let points: Vec<(f64, f64)> = rho
        .xd_grid
        .coords()
        .into_iter()
        .zip(row.iter())
        .filter_map(|(xd, v)| {
            let r = (v / center).norm();
            (r > FIT_FLOOR).then(|| (xd / scale, -r.ln()))
        })
        .collect();
    if points.len() < 5 {
        return Err(Error::FitFailure(format!("only {} usable points", points.len())));
    }
    // normal equations for c0 + c1 u + c2 u^2
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(u, y) in &points {
        let basis = [1.0, u, u * u];
        for i in 0..3 {
            atb[i] += basis[i] * y;
            for j in 0..3 {
                ata[i][j] += basis[i] * basis[j];
            }
        }
    }
    let c = solve3(ata, atb).ok_or_else(|| Error::FitFailure("singular normal equations".into()))?;
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let spread = points.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>();
    let misfit = points
        .iter()
        .map(|&(u, y)| (c[0] + c[1] * u + c[2] * u * u - y).powi(2))
        .sum::<f64>();
    if spread > 1e-20 && (misfit / spread).sqrt() > FIT_TOLERANCE {
        return Err(Error::FitFailure(format!(
            "envelope is not Gaussian (relative misfit {:.3e})",
            (misfit / spread).sqrt()
        )));
    }
    Ok(c[2] / (scale * scale))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// One row of the observable time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub t: f64,
    pub norm_re: f64,
    pub norm_im: f64,
    pub momentum: Option<f64>,
    pub purity: f64,
}

impl Observables {
    pub fn of(rho: &DensityOperatorGrid, hbar: f64) -> Self {
        let n = norm(rho);
        Self {
            t: rho.t,
            norm_re: n.re,
            norm_im: n.im,
            momentum: momentum_expectation(rho, hbar).ok(),
            purity: purity(rho),
        }
    }
}

pub const OBSERVABLES_HEADER: &str = "t,norm_re,norm_im,momentum,purity";

/// Writes observables as CSV; an undefined momentum is written as `nan`.
pub fn write_observables_csv<W: Write>(out: &mut W, rows: &[Observables]) -> std::io::Result<()> {
    writeln!(out, "{OBSERVABLES_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t,
            r.norm_re,
            r.norm_im,
            r.momentum.unwrap_or(f64::NAN),
            r.purity
        )?;
    }
    Ok(())
}
