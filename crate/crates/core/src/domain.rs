//! Physical parameters, grids and the basic state containers shared by the
//! rest of the crate.
//!
//! Everything here works in one spatial dimension. The harmonic
//! translation-invariant generator separates across Cartesian axes, so
//! higher-dimensional problems are products of the 1-D kernels.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::profile::Profile;

/// The seven coefficients of the harmonic, translation-invariant Lindblad
/// master equation.
///
/// No unit system is enforced; `hbar = m = 1` scaling is the usual choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Mass.
    pub m: f64,
    /// Reduced Planck constant.
    pub hbar: f64,
    /// Friction rate.
    pub nu: f64,
    /// Coefficient of the total-derivative term of the effective Lagrangian.
    pub xi: f64,
    /// Coordinate decoherence.
    pub d0: f64,
    /// Momentum diffusion.
    pub d2: f64,
    /// Dragging force.
    pub f: f64,
}

impl Default for PhysicalParams {
    /// Closed, force-free dynamics with `m = hbar = 1`.
    fn default() -> Self {
        Self {
            m: 1.0,
            hbar: 1.0,
            nu: 0.0,
            xi: 0.0,
            d0: 0.0,
            d2: 0.0,
            f: 0.0,
        }
    }
}

impl PhysicalParams {
    /// The `m = hbar = nu = 1, xi = 0, d0 = 2, d2 = 1, f = 0` reference set
    /// used throughout the test suites.
    pub fn reference() -> Self {
        Self {
            nu: 1.0,
            d0: 2.0,
            d2: 1.0,
            ..Self::default()
        }
    }

    pub fn with_force(mut self, f: f64) -> Self {
        self.f = f;
        self
    }

    pub fn validate(&self, strict: bool) -> Result<Self> {
        validate_params(self, strict)
    }

    /// Both sides of the positivity inequality `m^2 (nu^2 + 4 xi^2) <= 2 d0 d2`.
    pub fn positivity_sides(&self) -> (f64, f64) {
        let lhs = self.m * self.m * (self.nu * self.nu + 4.0 * self.xi * self.xi);
        let rhs = 2.0 * self.d0 * self.d2;
        (lhs, rhs)
    }

    /// `(d0 + d2 nu^2 - 2 m nu xi) / (2 hbar)`, the coefficient of the
    /// `x_d^2` damping term. Finite for every `nu`, unlike
    /// [`decoherence_coefficient`].
    pub fn damping_coefficient(&self) -> f64 {
        (self.d0 + self.d2 * self.nu * self.nu - 2.0 * self.m * self.nu * self.xi) / (2.0 * self.hbar)
    }

    /// True when none of the terms that break two-sided translations is present.
    pub fn is_closed(&self) -> bool {
        self.f == 0.0 && self.nu == 0.0 && self.xi == 0.0 && self.d0 == 0.0
    }

    /// Stable fingerprint of the parameter values (hex SHA-256 of the
    /// little-endian bit patterns).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for v in [self.m, self.hbar, self.nu, self.xi, self.d0, self.d2, self.f] {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Flat key-value configuration section for [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub m: f64,
    pub hbar: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub d0: f64,
    #[serde(default)]
    pub d2: f64,
    #[serde(default)]
    pub f: f64,
    #[serde(default)]
    pub strict_positivity: bool,
}

impl ParamsConfig {
    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            m: self.m,
            hbar: self.hbar,
            nu: self.nu,
            xi: self.xi,
            d0: self.d0,
            d2: self.d2,
            f: self.f,
        }
    }

    pub fn validated(&self) -> Result<PhysicalParams> {
        validate_params(&self.params(), self.strict_positivity)
    }
}

/// Relative slack on the positivity comparison, a few ulps.
const POSITIVITY_SLACK: f64 = 16.0 * f64::EPSILON;

/// Checks the sign constraints and, in strict mode, the Lindblad positivity
/// bound. Returns the parameters unchanged on success.
pub fn validate_params(p: &PhysicalParams, strict: bool) -> Result<PhysicalParams> {
    let named = [
        ("m", p.m),
        ("hbar", p.hbar),
        ("nu", p.nu),
        ("xi", p.xi),
        ("d0", p.d0),
        ("d2", p.d2),
        ("f", p.f),
    ];
    for (name, value) in named {
        if !value.is_finite() {
            return Err(Error::NonFinite { name });
        }
    }
    if p.m <= 0.0 {
        return Err(Error::NonPositiveMass(p.m));
    }
    if p.hbar <= 0.0 {
        return Err(Error::NonPositiveHbar(p.hbar));
    }
    for (name, value) in [("nu", p.nu), ("d0", p.d0), ("d2", p.d2)] {
        if value < 0.0 {
            return Err(Error::NegativeRate { name, value });
        }
    }
    if strict {
        let (lhs, rhs) = p.positivity_sides();
        if lhs > rhs + POSITIVITY_SLACK * lhs.max(rhs) {
            return Err(Error::PositivityViolation { lhs, rhs });
        }
    }
    Ok(*p)
}

/// `k_f = f / (hbar nu)`, the wave vector of the velocity at which drag and
/// friction balance.
pub fn drift_wavevector(p: &PhysicalParams) -> Result<f64> {
    if p.nu <= 0.0 {
        return Err(Error::ZeroFriction);
    }
    Ok(p.f / (p.hbar * p.nu))
}

/// `v_f = hbar k_f / m = f / (m nu)`.
pub fn drift_velocity(p: &PhysicalParams) -> Result<f64> {
    Ok(p.hbar * drift_wavevector(p)? / p.m)
}

/// `d = (d0 + d2 nu^2 - 2 m nu xi) / (2 hbar nu)`; the stationary Gaussian
/// decoherence width is `d / 2`.
pub fn decoherence_coefficient(p: &PhysicalParams) -> Result<f64> {
    if p.nu <= 0.0 {
        return Err(Error::ZeroFriction);
    }
    Ok(p.damping_coefficient() / p.nu)
}

/// Translation-group label of an elementary component. May be complex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveVector(pub Complex64);

impl WaveVector {
    pub fn real(q: f64) -> Self {
        Self(Complex64::new(q, 0.0))
    }

    pub fn imaginary(q_i: f64) -> Self {
        Self(Complex64::new(0.0, q_i))
    }

    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.re.is_finite() && self.0.im.is_finite()
    }
}

impl From<f64> for WaveVector {
    fn from(q: f64) -> Self {
        Self::real(q)
    }
}

impl From<Complex64> for WaveVector {
    fn from(q: Complex64) -> Self {
        Self(q)
    }
}

/// Uniform grid of `n` points centered on zero: `x_j = (j - n/2) * spacing`.
///
/// With even `n` the point `x = 0` sits at index `n / 2`, and the reflection
/// `x -> -x` maps index `j` to `(n - j) mod n` under periodic wrapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: usize,
    pub length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        let grid = Self { n, length };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 points, got {}", self.n)));
        }
        if !self.n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("point count must be even, got {}", self.n)));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {}", self.length)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    pub fn first(&self) -> f64 {
        self.coord(0)
    }

    pub fn last(&self) -> f64 {
        self.coord(self.n - 1)
    }

    /// Largest `|x|` on the grid.
    pub fn extent(&self) -> f64 {
        self.first().abs().max(self.last().abs())
    }

    pub fn zero_index(&self) -> usize {
        self.n / 2
    }

    /// Index of the mirror point `-x_j` under periodic wrapping.
    pub fn reflect_index(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let j = (x / self.spacing()).round() + (self.n / 2) as f64;
        j.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// FFT-conjugate wave numbers in FFT order: `2 pi k / length` for
    /// `k = 0, 1, .., n/2 - 1, -n/2, .., -1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dq = std::f64::consts::TAU / self.length;
        (0..self.n)
            .map(|k| {
                let signed = if k < self.n / 2 {
                    k as i64
                } else {
                    k as i64 - self.n as i64
                };
                signed as f64 * dq
            })
            .collect()
    }
}

/// `A_q(x, x_d) = exp(i q x) chi(x_d)`: a member of the translation
/// irreducible subspace labelled by `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryComponent {
    pub q: WaveVector,
    pub chi: Profile,
}

impl ElementaryComponent {
    pub fn new(q: impl Into<WaveVector>, chi: Profile) -> Self {
        Self { q: q.into(), chi }
    }

    /// Hermiticity of the full operator when `q` is real needs
    /// `chi(-x_d) = conj(chi(x_d))`. Second-class components need not
    /// satisfy it, so this is only a diagnostic.
    pub fn hermiticity_defect(&self, grid: &Grid) -> Option<f64> {
        if !self.q.is_real() {
            return None;
        }
        let samples = self.chi.samples(grid).ok()?;
        let scale = samples.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let defect = (0..grid.n)
            .map(|j| (samples[grid.reflect_index(j)] - samples[j].conj()).norm())
            .fold(0.0, f64::max);
        Some(defect / scale)
    }

    /// Samples `exp(i q x) chi(x_d)` on the product grid.
    pub fn to_density(&self, x_grid: &Grid, xd_grid: &Grid, t: f64) -> Result<DensityOperatorGrid> {
        let chi = self.chi.samples(xd_grid)?;
        let q = self.q.value();
        let mut values = Array2::zeros((x_grid.n, xd_grid.n));
        for (j, x) in x_grid.coords().into_iter().enumerate() {
            let phase = (Complex64::i() * q * x).exp();
            for (k, c) in chi.iter().enumerate() {
                values[[j, k]] = phase * c;
            }
        }
        DensityOperatorGrid::new(*x_grid, *xd_grid, values, t)
    }
}

/// Trace class of an elementary component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentClass {
    /// Nonvanishing trace.
    First,
    /// Vanishing trace.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: ComponentClass,
    pub trace: Complex64,
}

/// Relative trace tolerance: `|trace| > TRACE_TOLERANCE * L * max|chi|`.
pub const TRACE_TOLERANCE: f64 = 1e-9;

/// Classifies a component by its trace `int dx exp(i q x) chi(0)` over the
/// periodic box `[-L/2, L/2)`.
///
/// `tolerance` is relative to `L * max|chi|`; `None` uses
/// [`TRACE_TOLERANCE`].
pub fn classify_component(
    c: &ElementaryComponent,
    periodic_box: &Grid,
    profile_grid: &Grid,
    tolerance: Option<f64>,
) -> Result<Classification> {
    let chi0 = c.chi.eval(Complex64::new(0.0, 0.0))?;
    let scale = c
        .chi
        .samples(profile_grid)?
        .iter()
        .map(|z| z.norm())
        .fold(chi0.norm(), f64::max);
    let length = periodic_box.length;
    let x0 = -length / 2.0;
    let q = c.q.value();
    let integral = if q.norm() == 0.0 {
        Complex64::new(length, 0.0)
    } else {
        let iq = Complex64::i() * q;
        ((iq * (x0 + length)).exp() - (iq * x0).exp()) / iq
    };
    let trace = integral * chi0;
    let tol = tolerance.unwrap_or(TRACE_TOLERANCE) * length * scale;
    let class = if trace.norm() > tol {
        ComponentClass::First
    } else {
        ComponentClass::Second
    };
    Ok(Classification { class, trace })
}

/// `rho(x, x_d)` sampled on `x_grid x xd_grid`; row index runs over `x`,
/// column index over `x_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperatorGrid {
    pub x_grid: Grid,
    pub xd_grid: Grid,
    pub values: Array2<Complex64>,
    pub t: f64,
}

impl DensityOperatorGrid {
    pub fn new(x_grid: Grid, xd_grid: Grid, values: Array2<Complex64>, t: f64) -> Result<Self> {
        x_grid.check()?;
        xd_grid.check()?;
        if values.dim() != (x_grid.n, xd_grid.n) {
            return Err(Error::GridMismatch(format!(
                "values {:?} on a {}x{} grid",
                values.dim(),
                x_grid.n,
                xd_grid.n
            )));
        }
        Ok(Self {
            x_grid,
            xd_grid,
            values,
            t,
        })
    }

    pub fn zeros(x_grid: Grid, xd_grid: Grid) -> Self {
        Self {
            x_grid,
            xd_grid,
            values: Array2::zeros((x_grid.n, xd_grid.n)),
            t: 0.0,
        }
    }

    /// Samples `f(x, x_d)`.
    pub fn from_fn(x_grid: Grid, xd_grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let xs = x_grid.coords();
        let ds = xd_grid.coords();
        let values = Array2::from_shape_fn((x_grid.n, xd_grid.n), |(j, k)| f(xs[j], ds[k]));
        Self {
            x_grid,
            xd_grid,
            values,
            t: 0.0,
        }
    }

    pub fn same_grids(&self, other: &Self) -> bool {
        self.x_grid == other.x_grid && self.xd_grid == other.xd_grid
    }

    pub fn l2_norm(&self) -> f64 {
        let cell = self.x_grid.spacing() * self.xd_grid.spacing();
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Relative L2 distance `||self - other|| / ||other||`.
    pub fn relative_l2(&self, other: &Self) -> Result<f64> {
        if !self.same_grids(other) {
            return Err(Error::GridMismatch("relative_l2 on different grids".into()));
        }
        let num: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.values.iter().map(|z| z.norm_sqr()).sum();
        Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }

    /// `max |rho(x, -x_d) - conj(rho(x, x_d))| / max |rho|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.xd_grid.n;
        let mut defect: f64 = 0.0;
        for row in self.values.rows() {
            for k in 0..n {
                let mirror = row[self.xd_grid.reflect_index(k)];
                defect = defect.max((mirror - row[k].conj()).norm());
            }
        }
        defect / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Largest magnitude on the first and last `x_d` columns relative to the
    /// overall maximum.
    pub fn xd_edge_ratio(&self) -> f64 {
        let last = self.xd_grid.n - 1;
        let edge = self
            .values
            .rows()
            .into_iter()
            .map(|row| row[0].norm().max(row[last].norm()))
            .fold(0.0, f64::max);
        edge / self.max_abs().max(f64::MIN_POSITIVE)
    }
}
