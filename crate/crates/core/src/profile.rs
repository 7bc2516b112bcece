//! Relative-coordinate profiles `chi(x_d)` of elementary components.
//!
//! Two representations: an analytic Gaussian-times-polynomial family that
//! can be evaluated at complex arguments and is closed under the
//! characteristic flow, and grid samples that only support real arguments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `chi(y) = P(y) * exp(alpha y^2 + beta y + gamma)` with complex
/// coefficients; `poly` holds `P` in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPoly {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub poly: Vec<Complex64>,
}

impl GaussianPoly {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, poly: Vec<Complex64>) -> Self {
        let poly = if poly.is_empty() { vec![ZERO] } else { poly };
        Self {
            alpha,
            beta,
            gamma,
            poly,
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(ZERO, ZERO, ZERO, vec![c])
    }

    /// `amplitude * exp(-(y - center)^2 / (2 sigma^2) + i k0 y)`.
    pub fn gaussian(amplitude: Complex64, center: f64, sigma: f64, k0: f64) -> Self {
        let s2 = sigma * sigma;
        Self::new(
            Complex64::new(-0.5 / s2, 0.0),
            Complex64::new(center / s2, k0),
            Complex64::new(-0.5 * center * center / s2, 0.0),
            vec![amplitude],
        )
    }

    pub fn eval(&self, y: Complex64) -> Complex64 {
        let p = self.poly.iter().rev().fold(ZERO, |acc, c| acc * y + c);
        p * (self.alpha * y * y + self.beta * y + self.gamma).exp()
    }

    /// `y -> chi(scale * y + shift)`.
    pub fn compose_affine(&self, scale: Complex64, shift: Complex64) -> Self {
        let alpha = self.alpha * scale * scale;
        let beta = (2.0 * self.alpha * shift + self.beta) * scale;
        let gamma = self.alpha * shift * shift + self.beta * shift + self.gamma;
        // P(scale*y + shift) = sum_n c_n sum_k C(n,k) scale^k shift^(n-k) y^k
        let deg = self.poly.len();
        let mut poly = vec![ZERO; deg];
        for (n, c) in self.poly.iter().enumerate() {
            let mut binom = 1.0;
            for (k, slot) in poly.iter_mut().enumerate().take(n + 1) {
                *slot += c * binom * scale.powu(k as u32) * shift.powu((n - k) as u32);
                binom = binom * (n - k) as f64 / (k + 1) as f64;
            }
        }
        Self {
            alpha,
            beta,
            gamma,
            poly,
        }
    }

    /// Multiplies by `exp(constant + linear y + quadratic y^2)`.
    pub fn mul_exp_quadratic(&self, constant: Complex64, linear: Complex64, quadratic: Complex64) -> Self {
        Self {
            alpha: self.alpha + quadratic,
            beta: self.beta + linear,
            gamma: self.gamma + constant,
            poly: self.poly.clone(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            poly: self.poly.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }
}

/// Grid samples with local Lagrange interpolation at real arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

/// Points used by the interpolating polynomial.
const INTERP_POINTS: usize = 8;

impl SampledProfile {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.check()?;
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} samples on a {}-point grid",
                values.len(),
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn eval_real(&self, y: f64) -> Result<Complex64> {
        let h = self.grid.spacing();
        let lo = self.grid.first();
        let hi = self.grid.last();
        let slack = 1e-9 * h;
        if !(y >= lo - slack && y <= hi + slack) {
            return Err(Error::DomainEscape { re: y, im: 0.0 });
        }
        let pos = (y - lo) / h;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-12 {
            let j = (nearest as usize).min(self.grid.n - 1);
            return Ok(self.values[j]);
        }
        let n = self.grid.n;
        let start = (pos.floor() as isize - (INTERP_POINTS as isize / 2 - 1))
            .clamp(0, (n - INTERP_POINTS) as isize) as usize;
        let mut acc = ZERO;
        for i in 0..INTERP_POINTS {
            let mut w = 1.0;
            for j in 0..INTERP_POINTS {
                if i != j {
                    w *= (pos - (start + j) as f64) / (i as f64 - j as f64);
                }
            }
            acc += self.values[start + i] * w;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Analytic(GaussianPoly),
    Sampled(SampledProfile),
}

impl Profile {
    pub fn eval(&self, y: Complex64) -> Result<Complex64> {
        match self {
            Profile::Analytic(g) => Ok(g.eval(y)),
            Profile::Sampled(s) => {
                if y.im != 0.0 {
                    return Err(Error::DomainEscape { re: y.re, im: y.im });
                }
                s.eval_real(y.re)
            }
        }
    }

    /// Values on `grid`. Sampled profiles on a different grid are
    /// interpolated.
    pub fn samples(&self, grid: &Grid) -> Result<Vec<Complex64>> {
        match self {
            Profile::Sampled(s) if s.grid == *grid => Ok(s.values.clone()),
            _ => grid
                .coords()
                .into_iter()
                .map(|x| self.eval(Complex64::new(x, 0.0)))
                .collect(),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, Profile::Analytic(_))
    }

    /// `max |chi|` over the sample grid (analytic profiles use `grid`).
    pub fn max_abs(&self, grid: &Grid) -> Result<f64> {
        Ok(self.samples(grid)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

impl From<GaussianPoly> for Profile {
    fn from(g: GaussianPoly) -> Self {
        Profile::Analytic(g)
    }
}

impl From<SampledProfile> for Profile {
    fn from(s: SampledProfile) -> Self {
        Profile::Sampled(s)
    }
}
