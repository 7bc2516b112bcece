//! Method-of-lines integration of the master equation.
//!
//! This is the numerical oracle for the closed-form propagator: it never
//! touches the characteristic solution, only the generator written term by
//! term. Space is discretized with central differences (order 2 or 4) or
//! Fourier differentiation, time with the classical four-stage Runge-Kutta
//! scheme.

use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::domain::{DensityOperatorGrid, Grid, PhysicalParams, WaveVector};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest `|lambda dt|` inside the RK4 stability region along both axes.
const RK4_STABILITY_RADIUS: f64 = 2.78;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    Order2,
    Order4,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    /// Values beyond the grid are taken as zero. Valid while the solution
    /// has decayed at the edges.
    ClampedDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub stencil: Stencil,
    pub boundary: Boundary,
    /// Fraction of the estimated stability limit `dt` may use.
    pub safety: f64,
    /// Largest edge magnitude, relative to the maximum, tolerated along `x_d`.
    pub edge_tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            stencil: Stencil::Order4,
            boundary: Boundary::ClampedDecay,
            safety: 0.9,
            edge_tolerance: 1e-8,
        }
    }
}

impl IntegratorConfig {
    pub fn spectral(dt: f64) -> Self {
        Self {
            dt,
            stencil: Stencil::Spectral,
            boundary: Boundary::Periodic,
            ..Self::default()
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::InvalidConfig(format!("safety must be in (0, 1], got {}", self.safety)));
        }
        if self.stencil == Stencil::Spectral && self.boundary != Boundary::Periodic {
            return Err(Error::InvalidConfig("spectral differentiation needs a periodic boundary".into()));
        }
        if !(self.edge_tolerance > 0.0) {
            return Err(Error::InvalidConfig("edge_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// First and second derivatives along one uniform axis.
#[derive(Clone)]
pub struct Differentiator {
    n: usize,
    h: f64,
    stencil: Stencil,
    boundary: Boundary,
    wavenumbers: Vec<f64>,
    forward: Option<Arc<dyn Fft<f64>>>,
    inverse: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Differentiator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Differentiator")
            .field("n", &self.n)
            .field("h", &self.h)
            .field("stencil", &self.stencil)
            .field("boundary", &self.boundary)
            .finish()
    }
}

impl Differentiator {
    pub fn new(grid: &Grid, stencil: Stencil, boundary: Boundary) -> Self {
        let (forward, inverse) = if stencil == Stencil::Spectral {
            let mut planner = FftPlanner::new();
            (Some(planner.plan_fft_forward(grid.n)), Some(planner.plan_fft_inverse(grid.n)))
        } else {
            (None, None)
        };
        Self {
            n: grid.n,
            h: grid.spacing(),
            stencil,
            boundary,
            wavenumbers: grid.wavenumbers(),
            forward,
            inverse,
        }
    }

    /// Bound on `|eigenvalue|` of the first-derivative operator.
    pub fn first_radius(&self) -> f64 {
        match self.stencil {
            Stencil::Order2 => 1.0 / self.h,
            Stencil::Order4 => 1.372_3 / self.h,
            Stencil::Spectral => std::f64::consts::PI / self.h,
        }
    }

    /// Bound on `|eigenvalue|` of the second-derivative operator.
    pub fn second_radius(&self) -> f64 {
        match self.stencil {
            Stencil::Order2 => 4.0 / (self.h * self.h),
            Stencil::Order4 => 16.0 / (3.0 * self.h * self.h),
            Stencil::Spectral => (std::f64::consts::PI / self.h).powi(2),
        }
    }

    fn at(&self, f: &[Complex64], j: isize) -> Complex64 {
        let n = self.n as isize;
        match self.boundary {
            Boundary::Periodic => f[j.rem_euclid(n) as usize],
            Boundary::ClampedDecay => {
                if (0..n).contains(&j) {
                    f[j as usize]
                } else {
                    ZERO
                }
            }
        }
    }

    /// Multipliers (including the `1/n` of the inverse transform) of the
    /// Fourier derivative of the given order.
    fn spectral_factors(&self, order: u32) -> Vec<Complex64> {
        let scale = 1.0 / self.n as f64;
        let nyquist = self.n / 2;
        self.wavenumbers
            .iter()
            .enumerate()
            .map(|(k, &q)| match order {
                // The Nyquist mode has no consistent odd derivative.
                1 if k == nyquist => ZERO,
                1 => I * q * scale,
                _ => Complex64::new(-q * q * scale, 0.0),
            })
            .collect()
    }

    fn spectral(&self, f: &[Complex64], out: &mut [Complex64], order: u32) {
        let mut buf = f.to_vec();
        self.forward.as_ref().expect("spectral plan").process(&mut buf);
        buf.iter_mut().zip(self.spectral_factors(order)).for_each(|(z, m)| *z *= m);
        self.inverse.as_ref().expect("spectral plan").process(&mut buf);
        out.copy_from_slice(&buf);
    }

    pub fn d1(&self, f: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(f.len(), self.n);
        let h = self.h;
        match self.stencil {
            Stencil::Spectral => self.spectral(f, out, 1),
            Stencil::Order2 => {
                for (j, o) in out.iter_mut().enumerate() {
                    let j = j as isize;
                    *o = (self.at(f, j + 1) - self.at(f, j - 1)) / (2.0 * h);
                }
            }
            Stencil::Order4 => {
                for (j, o) in out.iter_mut().enumerate() {
                    let j = j as isize;
                    *o = (-self.at(f, j + 2) + 8.0 * self.at(f, j + 1) - 8.0 * self.at(f, j - 1) + self.at(f, j - 2))
                        / (12.0 * h);
                }
            }
        }
    }

    pub fn d2(&self, f: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(f.len(), self.n);
        let h2 = self.h * self.h;
        match self.stencil {
            Stencil::Spectral => self.spectral(f, out, 2),
            Stencil::Order2 => {
                for (j, o) in out.iter_mut().enumerate() {
                    let j = j as isize;
                    *o = (self.at(f, j + 1) - 2.0 * self.at(f, j) + self.at(f, j - 1)) / h2;
                }
            }
            Stencil::Order4 => {
                for (j, o) in out.iter_mut().enumerate() {
                    let j = j as isize;
                    *o = (-self.at(f, j + 2) + 16.0 * self.at(f, j + 1) - 30.0 * self.at(f, j)
                        + 16.0 * self.at(f, j - 1)
                        - self.at(f, j - 2))
                        / (12.0 * h2);
                }
            }
        }
    }

    /// First (or second) derivative of every length-`n` lane of `data`.
    pub fn lanes(&self, data: &[Complex64], second: bool) -> Vec<Complex64> {
        let mut out = vec![ZERO; data.len()];
        if self.stencil == Stencil::Spectral {
            let mut buf = data.to_vec();
            self.forward.as_ref().expect("spectral plan").process(&mut buf);
            let factors = self.spectral_factors(if second { 2 } else { 1 });
            for lane in buf.chunks_exact_mut(self.n) {
                lane.iter_mut().zip(&factors).for_each(|(z, f)| *z *= f);
            }
            self.inverse.as_ref().expect("spectral plan").process(&mut buf);
            return buf;
        }
        for (src, dst) in data.chunks_exact(self.n).zip(out.chunks_exact_mut(self.n)) {
            if second {
                self.d2(src, dst);
            } else {
                self.d1(src, dst);
            }
        }
        out
    }

    /// Both derivatives of every lane, sharing the forward transform.
    pub fn first_and_second(&self, data: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        if self.stencil != Stencil::Spectral {
            return (self.lanes(data, false), self.lanes(data, true));
        }
        let mut first = data.to_vec();
        self.forward.as_ref().expect("spectral plan").process(&mut first);
        let mut second = first.clone();
        let (f1, f2) = (self.spectral_factors(1), self.spectral_factors(2));
        for (a, b) in first.chunks_exact_mut(self.n).zip(second.chunks_exact_mut(self.n)) {
            a.iter_mut().zip(&f1).for_each(|(z, f)| *z *= f);
            b.iter_mut().zip(&f2).for_each(|(z, f)| *z *= f);
        }
        let inverse = self.inverse.as_ref().expect("spectral plan");
        inverse.process(&mut first);
        inverse.process(&mut second);
        (first, second)
    }

    pub fn d1_vec(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; f.len()];
        self.d1(f, &mut out);
        out
    }

    pub fn d2_vec(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; f.len()];
        self.d2(f, &mut out);
        out
    }
}

/// Coefficients of the component equation obtained by replacing `d/dx`
/// with `i q` in each term of the generator.
#[derive(Debug, Clone, Copy)]
struct ModeTerms {
    /// `(i hbar / m)(i q)`, multiplies `d chi / dx_d`.
    mixed: Complex64,
    /// `i f / hbar`, multiplies `x_d chi`.
    force: Complex64,
    /// `(d0 + d2 nu^2 - 2 m nu xi) / (2 hbar)`, multiplies `-x_d^2 chi`.
    damping: f64,
    /// `i (d2 nu / m - xi)(i q)`, multiplies `x_d chi`.
    cross: Complex64,
    /// `nu`, multiplies `-x_d d chi / dx_d`.
    friction: f64,
    /// `(hbar d2 / 2 m^2)(i q)^2`, multiplies `chi`.
    diffusion: Complex64,
}

impl ModeTerms {
    fn new(p: &PhysicalParams, q: Complex64) -> Self {
        let dx = I * q;
        Self {
            mixed: I * p.hbar / p.m * dx,
            force: I * p.f / p.hbar,
            damping: (p.d0 + p.d2 * p.nu * p.nu - 2.0 * p.m * p.nu * p.xi) / (2.0 * p.hbar),
            cross: I * (p.d2 * p.nu / p.m - p.xi) * dx,
            friction: p.nu,
            diffusion: p.hbar * p.d2 / (2.0 * p.m * p.m) * dx * dx,
        }
    }

    fn velocity(&self, x: f64) -> Complex64 {
        self.mixed - self.friction * x
    }

    fn source(&self, x: f64) -> Complex64 {
        self.diffusion + (self.force + self.cross) * x - self.damping * x * x
    }
}

fn mode_rhs(terms: &ModeTerms, coords: &[f64], diff: &Differentiator, chi: &[Complex64], out: &mut [Complex64]) {
    diff.d1(chi, out);
    for ((o, &x), c) in out.iter_mut().zip(coords).zip(chi) {
        *o = terms.velocity(x) * *o + terms.source(x) * c;
    }
}

/// Right-hand side of the component equation for `rho = exp(i q x) chi(x_d)`.
pub fn chi_rhs(
    p: &PhysicalParams,
    q: WaveVector,
    grid: &Grid,
    chi: &[Complex64],
    cfg: &IntegratorConfig,
) -> Result<Vec<Complex64>> {
    if chi.len() != grid.n {
        return Err(Error::GridMismatch(format!("{} samples on a {}-point grid", chi.len(), grid.n)));
    }
    cfg.check()?;
    let diff = Differentiator::new(grid, cfg.stencil, cfg.boundary);
    let mut out = vec![ZERO; grid.n];
    mode_rhs(&ModeTerms::new(p, q.value()), &grid.coords(), &diff, chi, &mut out);
    Ok(out)
}

/// Estimated largest stable RK4 step for the component equation.
pub fn chi_stability_bound(p: &PhysicalParams, q: WaveVector, grid: &Grid, cfg: &IntegratorConfig) -> f64 {
    let terms = ModeTerms::new(p, q.value());
    let diff = Differentiator::new(grid, cfg.stencil, cfg.boundary);
    let lambda = [grid.first(), grid.last(), 0.0]
        .into_iter()
        .map(|x| terms.velocity(x).norm() * diff.first_radius() + terms.source(x).norm())
        .fold(0.0, f64::max);
    stability_from_radius(lambda, cfg.safety)
}

fn stability_from_radius(lambda: f64, safety: f64) -> f64 {
    if lambda > 0.0 {
        safety * RK4_STABILITY_RADIUS / lambda
    } else {
        f64::INFINITY
    }
}

fn edge_ratio(chi: &[Complex64]) -> f64 {
    let max = chi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = chi[0].norm().max(chi[chi.len() - 1].norm());
    if max > 0.0 {
        edge / max
    } else {
        0.0
    }
}

fn step_count(t_final: f64, dt: f64) -> (usize, f64) {
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    (steps, t_final / steps as f64)
}

/// Fourth-order Runge-Kutta step over a flat complex buffer.
fn rk4_step<F>(state: &mut [Complex64], dt: f64, scratch: &mut [Vec<Complex64>; 5], mut rhs: F)
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let [k1, k2, k3, k4, tmp] = scratch;
    rhs(state, k1);
    for ((t, s), k) in tmp.iter_mut().zip(state.iter()).zip(k1.iter()) {
        *t = s + 0.5 * dt * k;
    }
    rhs(tmp, k2);
    for ((t, s), k) in tmp.iter_mut().zip(state.iter()).zip(k2.iter()) {
        *t = s + 0.5 * dt * k;
    }
    rhs(tmp, k3);
    for ((t, s), k) in tmp.iter_mut().zip(state.iter()).zip(k3.iter()) {
        *t = s + dt * k;
    }
    rhs(tmp, k4);
    for (i, s) in state.iter_mut().enumerate() {
        *s += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates the component equation to `t_final`.
///
/// The step actually used is `t_final / ceil(t_final / cfg.dt)`.
pub fn evolve_chi_numeric(
    chi: &[Complex64],
    grid: &Grid,
    p: &PhysicalParams,
    q: WaveVector,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Complex64>> {
    let mut out = evolve_chi_snapshots(chi, grid, p, q, &[t_final], cfg)?;
    Ok(out.pop().expect("one snapshot"))
}

/// Integrates the component equation and returns the state at each of the
/// (non-decreasing) `times`.
pub fn evolve_chi_snapshots(
    chi: &[Complex64],
    grid: &Grid,
    p: &PhysicalParams,
    q: WaveVector,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<Complex64>>> {
    cfg.check()?;
    if chi.len() != grid.n {
        return Err(Error::GridMismatch(format!("{} samples on a {}-point grid", chi.len(), grid.n)));
    }
    let bound = chi_stability_bound(p, q, grid, cfg);
    if cfg.dt > bound {
        return Err(Error::StabilityViolation { dt: cfg.dt, bound });
    }
    let terms = ModeTerms::new(p, q.value());
    let coords = grid.coords();
    let diff = Differentiator::new(grid, cfg.stencil, cfg.boundary);
    let mut state = chi.to_vec();
    let mut scratch: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![ZERO; grid.n]);
    let mut now = 0.0;
    let mut snapshots = Vec::with_capacity(times.len());
    for &target in times {
        if target < now {
            return Err(Error::InvalidConfig("snapshot times must be non-decreasing".into()));
        }
        let span = target - now;
        if span > 0.0 {
            let (steps, dt) = step_count(span, cfg.dt);
            for _ in 0..steps {
                rk4_step(&mut state, dt, &mut scratch, |f, out| mode_rhs(&terms, &coords, &diff, f, out));
                let edge = edge_ratio(&state);
                if edge > cfg.edge_tolerance {
                    return Err(Error::BoundaryLeak {
                        edge,
                        threshold: cfg.edge_tolerance,
                    });
                }
            }
        }
        now = target;
        snapshots.push(state.clone());
    }
    Ok(snapshots)
}

/// Differentiators and coefficients for the full `(x, x_d)` generator.
struct GridOperator {
    params: PhysicalParams,
    dx: Differentiator,
    dd: Differentiator,
    xd: Vec<f64>,
}

impl GridOperator {
    fn new(p: &PhysicalParams, x_grid: &Grid, xd_grid: &Grid, cfg: &IntegratorConfig) -> Self {
        // x is always periodic: the generator is translation invariant.
        Self {
            params: *p,
            dx: Differentiator::new(x_grid, cfg.stencil, Boundary::Periodic),
            dd: Differentiator::new(xd_grid, cfg.stencil, cfg.boundary),
            xd: xd_grid.coords(),
        }
    }

    fn stability_bound(&self, safety: f64) -> f64 {
        let p = &self.params;
        let x = self.xd.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let (sx, sd, sxx) = (self.dx.first_radius(), self.dd.first_radius(), self.dx.second_radius());
        let lambda = p.hbar / p.m * sx * sd
            + p.f.abs() / p.hbar * x
            + p.damping_coefficient().abs() * x * x
            + (p.d2 * p.nu / p.m - p.xi).abs() * x * sx
            + p.nu * x * sd
            + p.hbar * p.d2 / (2.0 * p.m * p.m) * sxx;
        stability_from_radius(lambda, safety)
    }

    fn apply(&self, rho: &Array2<Complex64>) -> Array2<Complex64> {
        let p = &self.params;
        let (nx, nd) = rho.dim();
        let rows = rho.as_standard_layout();
        let rows = rows.as_slice().expect("standard layout");
        let d_d = self.dd.lanes(rows, false);
        // lanes along x are the columns: work on the transpose
        let cols = rho.t().as_standard_layout().into_owned();
        let (d_x_t, d_xx_t) = self.dx.first_and_second(cols.as_slice().expect("standard layout"));
        let mut d_x = vec![ZERO; nx * nd];
        for k in 0..nd {
            for j in 0..nx {
                d_x[j * nd + k] = d_x_t[k * nx + j];
            }
        }
        let d_xd = self.dd.lanes(&d_x, false);
        let mixed = I * p.hbar / p.m;
        let force = I * p.f / p.hbar;
        let damping = p.damping_coefficient();
        let cross = I * (p.d2 * p.nu / p.m - p.xi);
        let diffusion = p.hbar * p.d2 / (2.0 * p.m * p.m);
        Array2::from_shape_fn((nx, nd), |(j, k)| {
            let x = self.xd[k];
            let i = j * nd + k;
            mixed * d_xd[i] + (force * x - damping * x * x) * rows[i] + cross * x * d_x[i] - p.nu * x * d_d[i]
                + diffusion * d_xx_t[k * nx + j]
        })
    }
}

/// All six terms of the master-equation generator applied to `rho`.
pub fn rho_rhs(p: &PhysicalParams, rho: &DensityOperatorGrid, cfg: &IntegratorConfig) -> Result<DensityOperatorGrid> {
    cfg.check()?;
    let op = GridOperator::new(p, &rho.x_grid, &rho.xd_grid, cfg);
    Ok(DensityOperatorGrid {
        x_grid: rho.x_grid,
        xd_grid: rho.xd_grid,
        values: op.apply(&rho.values),
        t: rho.t,
    })
}

/// Estimated largest stable RK4 step for the full-grid generator.
pub fn rho_stability_bound(p: &PhysicalParams, x_grid: &Grid, xd_grid: &Grid, cfg: &IntegratorConfig) -> f64 {
    GridOperator::new(p, x_grid, xd_grid, cfg).stability_bound(cfg.safety)
}

/// Time-steps the full density-operator grid to `rho.t + t_final`.
pub fn evolve_rho_numeric(
    rho: &DensityOperatorGrid,
    p: &PhysicalParams,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<DensityOperatorGrid> {
    cfg.check()?;
    if t_final < 0.0 {
        return Err(Error::NegativeTime(t_final));
    }
    if t_final == 0.0 {
        return Ok(rho.clone());
    }
    let op = GridOperator::new(p, &rho.x_grid, &rho.xd_grid, cfg);
    let bound = op.stability_bound(cfg.safety);
    if cfg.dt > bound {
        return Err(Error::StabilityViolation { dt: cfg.dt, bound });
    }
    let (steps, dt) = step_count(t_final, cfg.dt);
    let mut state = rho.values.clone();
    for _ in 0..steps {
        let k1 = op.apply(&state);
        let k2 = op.apply(&(&state + &(&k1 * (0.5 * dt))));
        let k3 = op.apply(&(&state + &(&k2 * (0.5 * dt))));
        let k4 = op.apply(&(&state + &(&k3 * dt)));
        state = state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let out = DensityOperatorGrid {
            x_grid: rho.x_grid,
            xd_grid: rho.xd_grid,
            values: state,
            t: 0.0,
        };
        let edge = out.xd_edge_ratio();
        if edge > cfg.edge_tolerance {
            return Err(Error::BoundaryLeak {
                edge,
                threshold: cfg.edge_tolerance,
            });
        }
        state = out.values;
    }
    DensityOperatorGrid::new(rho.x_grid, rho.xd_grid, state, rho.t + t_final)
}

/// `max_t max_x |d chi/dt - rhs(chi)| / max_x |chi|` for an analytic
/// candidate solution, with `d/dt` by centered differences of step `h_t`.
///
/// Sample times must be at least `h_t`.
pub fn pde_residual<F>(
    p: &PhysicalParams,
    q: WaveVector,
    solution: F,
    t_samples: &[f64],
    grid: &Grid,
    h_t: f64,
    cfg: &IntegratorConfig,
) -> Result<f64>
where
    F: Fn(f64, f64) -> Complex64,
{
    cfg.check()?;
    if !(h_t > 0.0) {
        return Err(Error::InvalidConfig("h_t must be positive".into()));
    }
    let coords = grid.coords();
    let sample = |t: f64| coords.iter().map(|&x| solution(t, x)).collect::<Vec<_>>();
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        if t < h_t {
            return Err(Error::InvalidConfig(format!("sample time {t} below h_t = {h_t}")));
        }
        let now = sample(t);
        let scale = now.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        let ahead = sample(t + h_t);
        let behind = sample(t - h_t);
        let rhs = chi_rhs(p, q, grid, &now, cfg)?;
        let residual = (0..grid.n)
            .map(|j| ((ahead[j] - behind[j]) / (2.0 * h_t) - rhs[j]).norm())
            .fold(0.0, f64::max);
        worst = worst.max(residual / scale);
    }
    Ok(worst)
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub norm_re: f64,
    pub norm_im: f64,
    pub residual: f64,
    pub edge: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "t,norm_re,norm_im,residual,edge";

pub fn write_diagnostics_csv<W: Write>(out: &mut W, rows: &[DiagnosticsRow]) -> std::io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for r in rows {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.norm_re, r.norm_im, r.residual, r.edge)?;
    }
    Ok(())
}

pub const SNAPSHOT_MAGIC: &str = "# opencomp-snapshot v1";

/// Writes `rho` as text: a header with time, grids and the parameter
/// fingerprint, then one line per `x` row of `re im` pairs.
pub fn write_snapshot<W: Write>(out: &mut W, rho: &DensityOperatorGrid, params_hash: &str) -> std::io::Result<()> {
    writeln!(out, "{SNAPSHOT_MAGIC}")?;
    writeln!(out, "# t {:.16e}", rho.t)?;
    writeln!(out, "# x_grid {} {:.16e}", rho.x_grid.n, rho.x_grid.length)?;
    writeln!(out, "# xd_grid {} {:.16e}", rho.xd_grid.n, rho.xd_grid.length)?;
    writeln!(out, "# params {params_hash}")?;
    for row in rho.values.rows() {
        let line: Vec<String> = row.iter().map(|z| format!("{:.16e} {:.16e}", z.re, z.im)).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Inverse of [`write_snapshot`]; returns the grid and the parameter hash.
pub fn read_snapshot(text: &str) -> Result<(DensityOperatorGrid, String)> {
    let bad = |what: &str| Error::InvalidConfig(format!("snapshot: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(bad("missing header"));
    }
    let mut field = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some("#") || parts.next() != Some(key) {
            return Err(bad(&format!("expected `{key}`")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad("malformed number"));
    let count = |s: &str| s.parse::<usize>().map_err(|_| bad("malformed count"));
    let t = num(&field("t")?[0])?;
    let xg = field("x_grid")?;
    let dg = field("xd_grid")?;
    let hash = field("params")?.join(" ");
    let x_grid = Grid::new(count(&xg[0])?, num(&xg[1])?)?;
    let xd_grid = Grid::new(count(&dg[0])?, num(&dg[1])?)?;
    let mut values = Array2::zeros((x_grid.n, xd_grid.n));
    let mut rows = 0;
    for (j, line) in lines.enumerate() {
        let nums = line.split_whitespace().map(num).collect::<Result<Vec<_>>>()?;
        if j >= x_grid.n || nums.len() != 2 * xd_grid.n {
            return Err(bad("shape does not match the header"));
        }
        for k in 0..xd_grid.n {
            values[[j, k]] = Complex64::new(nums[2 * k], nums[2 * k + 1]);
        }
        rows += 1;
    }
    if rows != x_grid.n {
        return Err(bad("missing rows"));
    }
    Ok((DensityOperatorGrid::new(x_grid, xd_grid, values, t)?, hash))
}
