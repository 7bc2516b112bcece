//! Closed-form time evolution of a single elementary component.
//!
//! Substituting `rho = exp(i q x) chi(x_d)` into the master equation leaves a
//! first-order equation for `chi` with advection velocity
//! `w - nu x_d`, `w = -hbar q / m`, and sources
//! `A + i B x_d - C x_d^2`:
//!
//! ```text
//! A = -hbar d2 q^2 / (2 m^2)
//! B = f / hbar + i (d2 nu / m - xi) q
//! C = (d0 + d2 nu^2 - 2 m nu xi) / (2 hbar)
//! ```
//!
//! Characteristics are `X(s) = c + (x_d - c) exp(-nu (t - s))` with
//! `c = w / nu`, and integrating the sources along them gives
//!
//! ```text
//! chi(t, x_d) = chi_i(x_d e^{-nu t} + w I1) exp(a + i k x_d - width x_d^2)
//! a     = A t + i B w M1 - C w^2 M2
//! k     = B I1 + i C w I1^2
//! width = C I2
//! ```
//!
//! in terms of the characteristic moments
//! `I1 = (1 - e^{-nu t}) / nu`, `I2 = (1 - e^{-2 nu t}) / (2 nu)`,
//! `M1 = int_0^t I1`, `M2 = int_0^t I1^2`. Every moment is regular at
//! `nu = 0`, which is handled by power series.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{decoherence_coefficient, drift_wavevector, ElementaryComponent, PhysicalParams, WaveVector};
use crate::error::{Error, Result};
use crate::profile::{Profile, SampledProfile};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientFormula {
    /// Characteristic solution of the component equation.
    #[default]
    Rederived,
    /// Older closed forms with a different `xi` term in `a_q`. That term
    /// does not vanish at `t = 0` and does not solve the component
    /// equation; kept only for comparison and as a negative control.
    Legacy,
}

/// `(a_q(t), k_q(t), width(t), shift(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorCoefficients {
    pub a: Complex64,
    pub k: Complex64,
    pub width: f64,
    pub shift: Complex64,
    /// `exp(-nu t)`, the contraction of the characteristic argument.
    pub contraction: f64,
}

/// Integrals of the characteristic flow; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    pub decay: f64,
    pub i1: f64,
    pub i2: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Below this `nu t` the moments are summed as power series.
const SERIES_CROSSOVER: f64 = 1.0;
const SERIES_TERMS: usize = 30;

fn phi1(z: f64) -> f64 {
    // (1 - e^{-z}) / z
    if z < SERIES_CROSSOVER {
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 0..SERIES_TERMS {
            sum += term;
            term *= -z / (n + 2) as f64;
        }
        sum
    } else {
        -(-z).exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    // (z - 1 + e^{-z}) / z^2
    if z < SERIES_CROSSOVER {
        let mut term = 0.5;
        let mut sum = 0.0;
        for n in 0..SERIES_TERMS {
            sum += term;
            term *= -z / (n + 3) as f64;
        }
        sum
    } else {
        ((-z).exp_m1() + z) / (z * z)
    }
}

fn phi3(z: f64) -> f64 {
    // (2z - 3 + 4e^{-z} - e^{-2z}) / (2 z^3)
    if z < SERIES_CROSSOVER {
        // sum_{n>=3} (-1)^n (4 - 2^n) z^{n-3} / (2 n!)
        let mut sum = 0.0;
        let mut zpow = 1.0;
        let mut fact = 6.0;
        let mut two_n = 8.0;
        for n in 3..(3 + SERIES_TERMS) {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (4.0 - two_n) * zpow / (2.0 * fact);
            zpow *= z;
            fact *= (n + 1) as f64;
            two_n *= 2.0;
        }
        sum
    } else {
        let e = (-z).exp();
        (2.0 * z - 3.0 + 4.0 * e - e * e) / (2.0 * z * z * z)
    }
}

pub(crate) fn moments(nu: f64, t: f64) -> Moments {
    let z = nu * t;
    Moments {
        decay: (-z).exp(),
        i1: t * phi1(z),
        i2: t * phi1(2.0 * z),
        m1: t * t * phi2(z),
        m2: t * t * t * phi3(z),
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// Velocity `w`, sources `(A, B, C)` of the component equation for label `q`.
pub(crate) fn component_sources(p: &PhysicalParams, q: Complex64) -> (Complex64, Complex64, Complex64, f64) {
    let kappa = I * q;
    let w = I * p.hbar * kappa / p.m;
    let a = p.hbar * p.d2 * kappa * kappa / (2.0 * p.m * p.m);
    let b = p.f / p.hbar + (p.d2 * p.nu / p.m - p.xi) * kappa;
    (w, a, b, p.damping_coefficient())
}

fn rederived(p: &PhysicalParams, q: Complex64, t: f64) -> PropagatorCoefficients {
    let mo = moments(p.nu, t);
    let (w, a_src, b_src, c_src) = component_sources(p, q);
    let a = a_src * t + I * b_src * w * mo.m1 - c_src * w * w * mo.m2;
    let k = b_src * mo.i1 + I * c_src * w * mo.i1 * mo.i1;
    PropagatorCoefficients {
        a,
        k,
        width: c_src * mo.i2,
        shift: w * mo.i1,
        contraction: mo.decay,
    }
}

fn legacy(p: &PhysicalParams, q: Complex64, t: f64) -> Result<PropagatorCoefficients> {
    if p.nu <= 0.0 {
        return Err(Error::ZeroFriction);
    }
    let PhysicalParams {
        m,
        hbar,
        nu,
        xi,
        d0,
        d2,
        f,
    } = *p;
    let e = (-nu * t).exp();
    let q2 = q * q;
    let a = -(2.0 * I * q * f * (nu * t - 1.0 + e) + hbar * q2 * xi * (1.0 + 2.0 * I * e + e * e)) / (2.0 * m * nu * nu)
        - hbar * q2 / (4.0 * m * m * nu.powi(3))
            * (d0 * (-e * e + 4.0 * e - 3.0 + 2.0 * nu * t) + d2 * nu * nu * (1.0 - e * e));
    let k = (1.0 - e) / (hbar * nu) * (f - I * hbar * q * xi * e)
        - I * q / (2.0 * m * nu * nu) * (d0 * (1.0 - e).powi(2) - d2 * nu * nu * (1.0 - e * e));
    let d = decoherence_coefficient(p)?;
    Ok(PropagatorCoefficients {
        a,
        k,
        width: 0.5 * d * (1.0 - e * e),
        shift: -hbar * q / (m * nu) * (1.0 - e),
        contraction: e,
    })
}

/// All propagator coefficients at time `t`.
pub fn coefficients(
    p: &PhysicalParams,
    q: WaveVector,
    t: f64,
    formula: CoefficientFormula,
) -> Result<PropagatorCoefficients> {
    check_time(t)?;
    match formula {
        CoefficientFormula::Rederived => Ok(rederived(p, q.value(), t)),
        CoefficientFormula::Legacy => legacy(p, q.value(), t),
    }
}

/// `(d/2)(1 - exp(-2 nu t))`, i.e. `C (1 - exp(-2 nu t)) / (2 nu)`; equals
/// `C t` in the frictionless limit.
pub fn gaussian_width(p: &PhysicalParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(p.damping_coefficient() * moments(p.nu, t).i2)
}

/// Initial-profile argument of the characteristic through `x_d` at time `t`.
pub fn characteristic_argument(p: &PhysicalParams, q: WaveVector, t: f64, x_d: f64) -> Result<Complex64> {
    let c = coefficients(p, q, t, CoefficientFormula::Rederived)?;
    Ok(x_d * c.contraction + c.shift)
}

pub fn coeff_a(p: &PhysicalParams, q: WaveVector, t: f64) -> Result<Complex64> {
    Ok(coefficients(p, q, t, CoefficientFormula::Rederived)?.a)
}

pub fn coeff_k(p: &PhysicalParams, q: WaveVector, t: f64) -> Result<Complex64> {
    Ok(coefficients(p, q, t, CoefficientFormula::Rederived)?.k)
}

/// Applies a set of coefficients to a profile.
pub fn apply_coefficients(chi: &Profile, coeffs: &PropagatorCoefficients) -> Result<Profile> {
    let PropagatorCoefficients {
        a,
        k,
        width,
        shift,
        contraction,
    } = *coeffs;
    match chi {
        Profile::Analytic(g) => Ok(Profile::Analytic(
            g.compose_affine(Complex64::new(contraction, 0.0), shift)
                .mul_exp_quadratic(a, I * k, Complex64::new(-width, 0.0)),
        )),
        Profile::Sampled(s) => {
            if shift.im != 0.0 {
                return Err(Error::DomainEscape {
                    re: shift.re,
                    im: shift.im,
                });
            }
            let values = s
                .grid
                .coords()
                .into_iter()
                .map(|x| {
                    let source = s.eval_real(x * contraction + shift.re)?;
                    Ok(source * (a + I * k * x - width * x * x).exp())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Profile::Sampled(SampledProfile::new(s.grid, values)?))
        }
    }
}

/// Evolves `c` to time `t`. The label `q` is never changed.
///
/// Sampled profiles only support real `q`; complex characteristic arguments
/// need the analytic family.
pub fn evolve_component(c: &ElementaryComponent, p: &PhysicalParams, t: f64) -> Result<ElementaryComponent> {
    p.validate(false)?;
    if !c.q.is_finite() {
        return Err(Error::InvalidConfig("non-finite wave vector".into()));
    }
    if t == 0.0 {
        return Ok(c.clone());
    }
    let coeffs = coefficients(p, c.q, t, CoefficientFormula::Rederived)?;
    Ok(ElementaryComponent {
        q: c.q,
        chi: apply_coefficients(&c.chi, &coeffs)?,
    })
}

/// Asymptotic rate of `exp(a_q)`: `-(hbar q / m)(i k_f + d0 q / (2 m nu^2))`.
pub fn longtime_weight_rate(p: &PhysicalParams, q: WaveVector) -> Result<Complex64> {
    let k_f = drift_wavevector(p)?;
    let q = q.value();
    Ok(-(p.hbar * q / p.m) * (I * k_f + p.d0 * q / (2.0 * p.m * p.nu * p.nu)))
}

/// Force that makes the norm of the `q = i q_i` component stationary:
/// `f = -hbar d0 q_i / (2 m nu)`, i.e. `k_f = -d0 q_i / (2 m nu^2)`.
pub fn equilibrium_force(p: &PhysicalParams, q_i: f64) -> Result<f64> {
    if p.nu <= 0.0 {
        return Err(Error::ZeroFriction);
    }
    Ok(-p.hbar * p.d0 * q_i / (2.0 * p.m * p.nu))
}

/// Speed of the drift that balances the flux of the `q = i q_i` component,
/// `hbar |q_i| d0 / (2 m^2 nu^2)`.
pub fn equilibrium_speed(p: &PhysicalParams, q_i: f64) -> Result<f64> {
    Ok((equilibrium_force(p, q_i)? / (p.m * p.nu)).abs())
}

/// Dyad labels `(k+, k-)` with `exp(i k+ x+ - i k- x-) = exp(i q x + i k x_d)`
/// for `x+- = x +- x_d / 2`.
pub fn open_to_closed_basis(q: f64, k: f64) -> (f64, f64) {
    (k + 0.5 * q, k - 0.5 * q)
}

/// Inverse of [`open_to_closed_basis`].
pub fn closed_to_open(k_plus: f64, k_minus: f64) -> (f64, f64) {
    (k_plus - k_minus, 0.5 * (k_plus + k_minus))
}

pub const TRAJECTORY_HEADER: &str = "t,re_a,im_a,re_k,im_k,width,re_shift,im_shift";

/// Writes the coefficient trajectory as CSV with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    p: &PhysicalParams,
    q: WaveVector,
    times: &[f64],
    formula: CoefficientFormula,
) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidConfig(format!("write failed: {e}"));
    writeln!(out, "{TRAJECTORY_HEADER}").map_err(io)?;
    for &t in times {
        let c = coefficients(p, q, t, formula)?;
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t, c.a.re, c.a.im, c.k.re, c.k.im, c.width, c.shift.re, c.shift.im
        )
        .map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::GaussianPoly;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn series_and_closed_forms_agree_at_crossover() {
        let z: f64 = 1.0 - 1e-12;
        let closed = [
            -(-z).exp_m1() / z,
            ((-z).exp_m1() + z) / (z * z),
            (2.0 * z - 3.0 + 4.0 * (-z).exp() - (-2.0 * z).exp()) / (2.0 * z * z * z),
        ];
        for (series, closed) in [phi1(z), phi2(z), phi3(z)].into_iter().zip(closed) {
            assert!((series - closed).abs() < 1e-14, "{series} vs {closed}");
        }
        assert_eq!(phi1(0.0), 1.0);
        assert_eq!(phi2(0.0), 0.5);
        assert!((phi3(0.0) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn moments_by_quadrature() {
        // M1 = int I1, M2 = int I1^2 checked with composite Simpson.
        let nu = 0.7;
        let t = 2.3;
        let n = 2000;
        let h = t / n as f64;
        let i1 = |u: f64| (1.0 - (-nu * u).exp()) / nu;
        let simpson = |g: &dyn Fn(f64) -> f64| {
            (0..=n)
                .map(|j| {
                    let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                    w * g(j as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        let mo = moments(nu, t);
        assert!((mo.m1 - simpson(&i1)).abs() < 1e-12);
        assert!((mo.m2 - simpson(&|u| i1(u) * i1(u))).abs() < 1e-12);
        assert!((mo.i2 - simpson(&|u| (-2.0 * nu * u).exp())).abs() < 1e-12);
    }

    #[test]
    fn gaussian_width_examples() {
        let p = PhysicalParams::reference();
        assert_eq!(gaussian_width(&p, 0.0).unwrap(), 0.0);
        assert!((gaussian_width(&p, 60.0).unwrap() - 0.75).abs() < 1e-14);
        assert!((gaussian_width(&p, 2f64.ln()).unwrap() - 0.5625).abs() < 1e-14);
        assert!(gaussian_width(&p, -1.0).is_err());
        // frictionless limit C t
        let closed = PhysicalParams { nu: 0.0, ..p };
        assert!((gaussian_width(&closed, 2.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn characteristic_argument_examples() {
        let p = PhysicalParams::reference();
        assert_eq!(characteristic_argument(&p, 1.0.into(), 0.0, 0.3).unwrap(), Complex64::new(0.3, 0.0));
        let arg = characteristic_argument(&p, 0.0.into(), 1.5, 0.3).unwrap();
        assert!(close(arg, Complex64::new(0.3 * (-1.5f64).exp(), 0.0), 1e-15));
        let arg = characteristic_argument(&p, 2.0.into(), 60.0, 0.0).unwrap();
        assert!((arg.norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn coeff_a_examples() {
        let p = PhysicalParams::reference().with_force(0.7);
        assert_eq!(coeff_a(&p, 1.3.into(), 0.0).unwrap(), Complex64::new(0.0, 0.0));
        for t in [0.1, 1.0, 7.0] {
            assert_eq!(coeff_a(&p, 0.0.into(), t).unwrap(), Complex64::new(0.0, 0.0));
        }
        let p = PhysicalParams::reference();
        let expected = -p.hbar * p.d0 / (2.0 * p.m * p.m * p.nu * p.nu);
        // a_q/t carries an O(1/t) offset (1.25/t here), so the 1% match of
        // the average needs nu t ~ 200; the slope is already there at 20.
        let slope = (coeff_a(&p, 1.0.into(), 20.0).unwrap() - coeff_a(&p, 1.0.into(), 19.0).unwrap()).re;
        assert!((slope - expected).abs() < 0.01 * expected.abs());
        let t = 200.0;
        let rate = coeff_a(&p, 1.0.into(), t).unwrap() / t;
        assert!((rate.re - expected).abs() < 0.01 * expected.abs());
    }

    #[test]
    fn coeff_k_examples() {
        let p = PhysicalParams {
            nu: 1.0,
            f: 1.0,
            ..PhysicalParams::default()
        };
        assert_eq!(coeff_k(&p, 1.0.into(), 0.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!(close(coeff_k(&p, 0.5.into(), 60.0).unwrap(), Complex64::new(1.0, 0.0), 1e-14));
        let p = PhysicalParams {
            nu: 1.0,
            d0: 1.0,
            ..PhysicalParams::default()
        };
        assert!(close(coeff_k(&p, 1.0.into(), 60.0).unwrap(), Complex64::new(0.0, -0.5), 1e-14));
        // closed-form reduction for xi = d0 = d2 = 0
        let p = PhysicalParams {
            nu: 0.8,
            f: 1.7,
            ..PhysicalParams::default()
        };
        let t = 1.3;
        let expected = p.f / (p.hbar * p.nu) * (1.0 - (-p.nu * t).exp());
        assert!(close(coeff_k(&p, 2.0.into(), t).unwrap(), expected.into(), 1e-14));
    }

    #[test]
    fn legacy_k_and_shift_agree_with_rederived() {
        let p = PhysicalParams {
            m: 1.3,
            hbar: 0.9,
            nu: 0.6,
            xi: 0.2,
            d0: 1.1,
            d2: 0.7,
            f: 0.4,
        };
        let q = WaveVector::new(0.8, -0.3);
        for t in [0.0, 0.4, 2.0, 9.0] {
            let r = coefficients(&p, q, t, CoefficientFormula::Rederived).unwrap();
            let pub_ = coefficients(&p, q, t, CoefficientFormula::Legacy).unwrap();
            assert!(close(r.k, pub_.k, 1e-12), "k at t={t}");
            assert!(close(r.shift, pub_.shift, 1e-12), "shift at t={t}");
            assert!((r.width - pub_.width).abs() < 1e-12);
        }
        // the legacy a_q differs only by its xi term
        let no_xi = PhysicalParams { xi: 0.0, ..p };
        let r = coefficients(&no_xi, q, 1.7, CoefficientFormula::Rederived).unwrap();
        let pub_ = coefficients(&no_xi, q, 1.7, CoefficientFormula::Legacy).unwrap();
        assert!(close(r.a, pub_.a, 1e-12));
        let at_zero = coefficients(&p, q, 0.0, CoefficientFormula::Legacy).unwrap();
        let expected = -(p.hbar * q.value() * q.value() * p.xi * Complex64::new(2.0, 2.0)) / (2.0 * p.m * p.nu * p.nu);
        assert!(close(at_zero.a, expected, 1e-14));
    }

    #[test]
    fn frictionless_limit_is_continuous() {
        let base = PhysicalParams {
            m: 1.0,
            hbar: 1.0,
            nu: 0.0,
            xi: 0.3,
            d0: 0.5,
            d2: 0.8,
            f: 0.6,
        };
        let q = WaveVector::new(0.7, 0.2);
        let t = 1.9;
        let at_zero = coefficients(&base, q, t, CoefficientFormula::Rederived).unwrap();
        let tiny = coefficients(&PhysicalParams { nu: 1e-9, ..base }, q, t, CoefficientFormula::Rederived).unwrap();
        assert!(close(at_zero.a, tiny.a, 1e-8));
        assert!(close(at_zero.k, tiny.k, 1e-8));
        assert!(close(at_zero.shift, tiny.shift, 1e-8));
        // nu = 0: shift = w t, width = C t
        assert!(close(at_zero.shift, Complex64::new(-0.7 * t, -0.2 * t), 1e-14));
        assert!((at_zero.width - base.damping_coefficient() * t).abs() < 1e-14);
    }

    #[test]
    fn longtime_rate_examples() {
        let p = PhysicalParams::reference();
        assert_eq!(longtime_weight_rate(&p, 0.0.into()).unwrap(), Complex64::new(0.0, 0.0));
        let r = longtime_weight_rate(&p, 1.5.into()).unwrap();
        assert!(close(r, Complex64::new(-2.25, 0.0), 1e-15));
        let f = equilibrium_force(&p, 0.8).unwrap();
        let r = longtime_weight_rate(&p.with_force(f), WaveVector::imaginary(0.8)).unwrap();
        assert!(r.norm() < 1e-15);
        assert_eq!(longtime_weight_rate(&PhysicalParams::default(), 1.0.into()), Err(Error::ZeroFriction));
    }

    #[test]
    fn equilibrium_force_examples() {
        let p = PhysicalParams::reference();
        assert_eq!(equilibrium_force(&p, 0.0).unwrap(), 0.0);
        assert_eq!(equilibrium_force(&p, 1.0).unwrap().abs(), 1.0);
        assert_eq!(equilibrium_speed(&p, 1.0).unwrap(), 1.0);
        assert_eq!(equilibrium_force(&p, 2.0).unwrap(), 2.0 * equilibrium_force(&p, 1.0).unwrap());
    }

    #[test]
    fn dyad_labels() {
        assert_eq!(open_to_closed_basis(0.0, 0.0), (0.0, 0.0));
        let (kp, km) = open_to_closed_basis(1.0, 2.0);
        let mut worst: f64 = 0.0;
        for j in 0..41 {
            for l in 0..41 {
                let x = -5.0 + 0.25 * j as f64;
                let xd = -5.0 + 0.25 * l as f64;
                let (xp, xm) = (x + 0.5 * xd, x - 0.5 * xd);
                let closed = Complex64::new(0.0, kp * xp - km * xm).exp();
                let open = Complex64::new(0.0, 1.0 * x + 2.0 * xd).exp();
                worst = worst.max((closed - open).norm());
            }
        }
        assert!(worst < 1e-13, "{worst}");
    }

    #[test]
    fn evolve_identity_and_label() {
        let p = PhysicalParams::reference();
        let c = ElementaryComponent::new(1.0, GaussianPoly::gaussian(Complex64::new(1.0, 0.0), 0.0, 1.0, 0.0).into());
        assert_eq!(evolve_component(&c, &p, 0.0).unwrap(), c);
        let later = evolve_component(&c, &p, 2.0).unwrap();
        assert_eq!(later.q, c.q);
    }

    #[test]
    fn trajectory_csv_layout() {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &PhysicalParams::reference(), 1.0.into(), &[0.0, 1.0], CoefficientFormula::Rederived).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 8);
        assert!(lines[1].starts_with("0.0000000000000000e0,"));
    }
}
