//! Tensor-operator bases for rotationally invariant open dynamics.
//!
//! Operators mapping the multiplet `l+` to `l-` are expanded in irreducible
//! tensor operators `T^(l)_m`, which rotate among themselves under the
//! diagonal (bra and ket together) action of rotations. All angular
//! momenta are stored doubled so half-integers are exact; `m` indices of
//! matrices run downward from `+l`.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::Array2;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `(l, m)` stored as `(2l, 2m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AngularMomentumLabel {
    pub two_ell: u32,
    pub two_m: i32,
}

impl AngularMomentumLabel {
    pub fn new(two_ell: u32, two_m: i32) -> Result<Self> {
        let label = Self { two_ell, two_m };
        label.check()?;
        Ok(label)
    }

    /// From ordinary values; both must be multiples of 1/2.
    pub fn from_values(ell: f64, m: f64) -> Result<Self> {
        let (two_ell, two_m) = (2.0 * ell, 2.0 * m);
        if two_ell.fract() != 0.0 || two_m.fract() != 0.0 || two_ell < 0.0 {
            return Err(Error::InvalidLabel(format!("(l, m) = ({ell}, {m})")));
        }
        Self::new(two_ell as u32, two_m as i32)
    }

    pub fn check(&self) -> Result<()> {
        let l = self.two_ell as i32;
        if self.two_m.abs() > l || (l + self.two_m) % 2 != 0 {
            return Err(Error::InvalidLabel(format!("(2l, 2m) = ({}, {})", self.two_ell, self.two_m)));
        }
        Ok(())
    }

    pub fn ell(&self) -> f64 {
        self.two_ell as f64 / 2.0
    }

    pub fn m(&self) -> f64 {
        self.two_m as f64 / 2.0
    }

    /// Row index of `m` in a multiplet matrix (`m = l` first).
    pub fn index(&self) -> usize {
        ((self.two_ell as i32 - self.two_m) / 2) as usize
    }
}

/// Dimension `2l + 1` of the multiplet with doubled label `two_ell`.
pub fn multiplet_dim(two_ell: u32) -> usize {
    two_ell as usize + 1
}

/// Doubled `m` values of a multiplet, from `+l` down to `-l`.
pub fn m_values(two_ell: u32) -> impl Iterator<Item = i32> {
    let l = two_ell as i32;
    (0..=two_ell as i32).map(move |i| l - 2 * i)
}

fn factorial(n: i32) -> BigInt {
    (1..=n.max(0)).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `x!` for a doubled argument known to be even; `None` if negative.
fn half_factorial(two_x: i32) -> Option<BigInt> {
    (two_x >= 0).then(|| factorial(two_x / 2))
}

fn triangle(a: u32, b: u32, c: u32) -> bool {
    let (a, b, c) = (a as i32, b as i32, c as i32);
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// Condon-Shortley coefficient `<l1 m1, l2 m2 | l m>` squared, with its sign,
/// in exact arithmetic.
pub fn clebsch_gordan_exact(
    j1: AngularMomentumLabel,
    j2: AngularMomentumLabel,
    j: AngularMomentumLabel,
) -> Result<(i8, BigRational)> {
    j1.check()?;
    j2.check()?;
    j.check()?;
    let zero = (0, BigRational::zero());
    if j1.two_m + j2.two_m != j.two_m || !triangle(j1.two_ell, j2.two_ell, j.two_ell) {
        return Ok(zero);
    }
    let (a, b, c) = (j1.two_ell as i32, j2.two_ell as i32, j.two_ell as i32);
    let (ma, mb, mc) = (j1.two_m, j2.two_m, j.two_m);
    let f = |x: i32| half_factorial(x).expect("non-negative by the triangle rule");
    let num = BigInt::from(c + 1)
        * f(c + a - b)
        * f(c - a + b)
        * f(a + b - c)
        * f(c + mc)
        * f(c - mc)
        * f(a - ma)
        * f(a + ma)
        * f(b - mb)
        * f(b + mb);
    let den = f(a + b + c + 2);
    // Racah sum over k (doubled arguments stay even)
    let mut sum = BigRational::zero();
    let mut k = 0;
    loop {
        let two_k = 2 * k;
        let terms = [
            two_k,
            a + b - c - two_k,
            a - ma - two_k,
            b + mb - two_k,
            c - b + ma + two_k,
            c - a - mb + two_k,
        ];
        if terms[1] < 0 || terms[2] < 0 || terms[3] < 0 {
            break;
        }
        if terms.iter().all(|&t| t >= 0) {
            let d = terms.iter().fold(BigInt::one(), |acc, &t| acc * f(t));
            let term = BigRational::new(BigInt::one(), d);
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        k += 1;
    }
    if sum.is_zero() {
        return Ok(zero);
    }
    let sign = if sum.is_negative() { -1 } else { 1 };
    Ok((sign, BigRational::new(num, den) * &sum * &sum))
}

/// Condon-Shortley coefficient `<l1 m1, l2 m2 | l m>`.
pub fn clebsch_gordan(j1: AngularMomentumLabel, j2: AngularMomentumLabel, j: AngularMomentumLabel) -> Result<f64> {
    let (sign, square) = clebsch_gordan_exact(j1, j2, j)?;
    Ok(sign as f64 * square.to_f64().unwrap_or(0.0).sqrt())
}

/// Doubled-argument shorthand for [`clebsch_gordan`].
pub fn cg(two_j1: u32, two_m1: i32, two_j2: u32, two_m2: i32, two_j: u32, two_m: i32) -> Result<f64> {
    clebsch_gordan(
        AngularMomentumLabel::new(two_j1, two_m1)?,
        AngularMomentumLabel::new(two_j2, two_m2)?,
        AngularMomentumLabel::new(two_j, two_m)?,
    )
}

fn factorial_f64(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Wigner small-d matrix `d^l_{m' m}(beta)`; rows `m'`, columns `m`.
pub fn wigner_d(two_ell: u32, beta: f64) -> Array2<f64> {
    let dim = multiplet_dim(two_ell);
    let j = two_ell as i32;
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let mut d = Array2::zeros((dim, dim));
    for (r, mp) in m_values(two_ell).enumerate() {
        for (col, m) in m_values(two_ell).enumerate() {
            let (jpm, jmm, jpmp, jmmp) = ((j + m) / 2, (j - m) / 2, (j + mp) / 2, (j - mp) / 2);
            let diff = (mp - m) / 2;
            let pref = (factorial_f64(jpmp) * factorial_f64(jmmp) * factorial_f64(jpm) * factorial_f64(jmm)).sqrt();
            let lo = 0.max(-diff);
            let hi = jpm.min(jmmp);
            let mut acc = 0.0;
            for k in lo..=hi {
                let sign = if (diff + k) % 2 == 0 { 1.0 } else { -1.0 };
                let c_exp = (2 * j + m - mp) / 2 - 2 * k;
                let s_exp = (mp - m) / 2 + 2 * k;
                let denom = factorial_f64(jpm - k) * factorial_f64(k) * factorial_f64(diff + k) * factorial_f64(jmmp - k);
                acc += sign * c.powi(c_exp) * s.powi(s_exp) / denom;
            }
            d[[r, col]] = pref * acc;
        }
    }
    d
}

/// Euler angles in the z-y-z convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub const IDENTITY: Self = Self {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }
}

/// `D^l_{m' m} = exp(-i m' alpha) d^l_{m' m}(beta) exp(-i m gamma)`.
pub fn wigner_big_d(two_ell: u32, angles: EulerAngles) -> Array2<Complex64> {
    let d = wigner_d(two_ell, angles.beta);
    let ms: Vec<f64> = m_values(two_ell).map(|m| m as f64 / 2.0).collect();
    Array2::from_shape_fn(d.raw_dim(), |(r, c)| {
        Complex64::from_polar(1.0, -ms[r] * angles.alpha - ms[c] * angles.gamma) * d[[r, c]]
    })
}

/// One basis operator `T^(l)_m` of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorOperator {
    pub two_rank: u32,
    pub two_m: i32,
    pub matrix: Array2<Complex64>,
}

/// Orthonormal tensor-operator basis of the operators from `l+` to `l-`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorOperatorBasis {
    pub two_ell_minus: u32,
    pub two_ell_plus: u32,
    /// Non-rotational quantum number of the block; carried, never used.
    pub n: u32,
    operators: Vec<TensorOperator>,
}

/// `sqrt((2l + 1) / (2l- + 1))`, the factor making `Tr T^dagger T = 1`.
pub fn rank_normalization(two_rank: u32, two_ell_minus: u32) -> f64 {
    ((two_rank as f64 + 1.0) / (two_ell_minus as f64 + 1.0)).sqrt()
}

/// Ranks coupling `l+` to `l-`, doubled, ascending.
pub fn ranks(two_ell_minus: u32, two_ell_plus: u32) -> impl Iterator<Item = u32> {
    let lo = two_ell_minus.abs_diff(two_ell_plus);
    (lo..=two_ell_minus + two_ell_plus).step_by(2)
}

pub fn tensor_operator_basis(two_ell_minus: u32, two_ell_plus: u32) -> Result<TensorOperatorBasis> {
    if two_ell_minus > 64 || two_ell_plus > 64 {
        return Err(Error::InvalidLabel("multiplets above l = 32 are not supported".into()));
    }
    let (dm, dp) = (multiplet_dim(two_ell_minus), multiplet_dim(two_ell_plus));
    let mut operators = Vec::new();
    for two_rank in ranks(two_ell_minus, two_ell_plus) {
        let norm = rank_normalization(two_rank, two_ell_minus);
        for two_m in m_values(two_rank) {
            let mut matrix = Array2::zeros((dm, dp));
            for (r, m_minus) in m_values(two_ell_minus).enumerate() {
                for (c, m_plus) in m_values(two_ell_plus).enumerate() {
                    if m_plus + two_m == m_minus {
                        let v = cg(two_ell_plus, m_plus, two_rank, two_m, two_ell_minus, m_minus)?;
                        matrix[[r, c]] = Complex64::new(norm * v, 0.0);
                    }
                }
            }
            operators.push(TensorOperator { two_rank, two_m, matrix });
        }
    }
    Ok(TensorOperatorBasis {
        two_ell_minus,
        two_ell_plus,
        n: 0,
        operators,
    })
}

fn pairing(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

impl TensorOperatorBasis {
    pub fn with_tag(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn shape(&self) -> (usize, usize) {
        (multiplet_dim(self.two_ell_minus), multiplet_dim(self.two_ell_plus))
    }

    pub fn operators(&self) -> &[TensorOperator] {
        &self.operators
    }

    /// Mutable access, for building deliberately broken bases in tests.
    pub fn operator_mut(&mut self, index: usize) -> Option<&mut TensorOperator> {
        self.operators.get_mut(index)
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn get(&self, two_rank: u32, two_m: i32) -> Option<&TensorOperator> {
        self.operators.iter().find(|t| t.two_rank == two_rank && t.two_m == two_m)
    }

    /// `Tr[T_a^dagger T_b]` for all pairs.
    pub fn gram(&self) -> Array2<Complex64> {
        let n = self.len();
        Array2::from_shape_fn((n, n), |(a, b)| pairing(&self.operators[a].matrix, &self.operators[b].matrix))
    }

    /// Largest entry of `gram - identity`.
    pub fn orthonormality_defect(&self) -> f64 {
        self.gram()
            .indexed_iter()
            .map(|((a, b), g)| (g - if a == b { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max)
    }

    /// `Sum_{l,m} coeff * T^(l)_m`.
    pub fn reconstruct(&self, coefficients: &BTreeMap<(u32, i32), Complex64>) -> Array2<Complex64> {
        let mut out = Array2::zeros(self.shape());
        for t in &self.operators {
            if let Some(c) = coefficients.get(&(t.two_rank, t.two_m)) {
                out.scaled_add(*c, &t.matrix);
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ops: Vec<serde_json::Value> = self
            .operators
            .iter()
            .map(|t| {
                let rows: Vec<Vec<[f64; 2]>> = t
                    .matrix
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                    .collect();
                serde_json::json!({ "rank": t.two_rank as f64 / 2.0, "m": t.two_m as f64 / 2.0, "matrix": rows })
            })
            .collect();
        serde_json::json!({
            "ell_minus": self.two_ell_minus as f64 / 2.0,
            "ell_plus": self.two_ell_plus as f64 / 2.0,
            "n": self.n,
            "operators": ops,
        })
    }
}

/// Content of one rank in a Wigner-Eckart decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankContent {
    /// `<<l- || T || l+>>` for the dominant component: matrix elements are
    /// `CG(l+ m+, l m | l- m-)` times this value.
    pub reduced: Complex64,
    /// Doubled `m` of the dominant component.
    pub two_m: i32,
    /// Hilbert-Schmidt norm of the remaining components of this rank.
    pub residual: f64,
    /// Projections on `T^(l)_m` in basis order (`m` descending).
    pub projections: Vec<Complex64>,
}

/// Projections of `m` on every basis operator, grouped by rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerEckartDecomposition {
    pub ranks: BTreeMap<u32, RankContent>,
}

impl WignerEckartDecomposition {
    pub fn coefficients(&self) -> BTreeMap<(u32, i32), Complex64> {
        self.ranks
            .iter()
            .flat_map(|(&two_rank, content)| {
                m_values(two_rank)
                    .zip(content.projections.iter())
                    .map(move |(two_m, c)| ((two_rank, two_m), *c))
            })
            .collect()
    }
}

pub fn decompose_wigner_eckart(m: &Array2<Complex64>, basis: &TensorOperatorBasis) -> Result<WignerEckartDecomposition> {
    if m.dim() != basis.shape() {
        return Err(Error::ShapeMismatch {
            expected: basis.shape(),
            got: m.dim(),
        });
    }
    let mut ranks = BTreeMap::new();
    for two_rank in ranks_of(basis) {
        let projections: Vec<Complex64> = m_values(two_rank)
            .map(|two_m| basis.get(two_rank, two_m).map_or(ZERO, |t| pairing(&t.matrix, m)))
            .collect();
        let (dominant, _) = projections
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, c)| if c.norm() > best.1 { (i, c.norm()) } else { best });
        let residual = projections
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != dominant)
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        ranks.insert(
            two_rank,
            RankContent {
                reduced: projections[dominant] * rank_normalization(two_rank, basis.two_ell_minus),
                two_m: two_rank as i32 - 2 * dominant as i32,
                residual,
                projections,
            },
        );
    }
    Ok(WignerEckartDecomposition { ranks })
}

fn ranks_of(basis: &TensorOperatorBasis) -> Vec<u32> {
    let mut r: Vec<u32> = basis.operators.iter().map(|t| t.two_rank).collect();
    r.dedup();
    r
}

/// Expansion of the dyad `|l- m-><l+ m+|` over the basis: `(2l, 2m, coefficient)`
/// for every basis operator, zero unless `m = m- - m+`.
pub fn dyad_expansion(
    minus: AngularMomentumLabel,
    plus: AngularMomentumLabel,
    basis: &TensorOperatorBasis,
) -> Result<Vec<(u32, i32, f64)>> {
    minus.check()?;
    plus.check()?;
    if minus.two_ell != basis.two_ell_minus || plus.two_ell != basis.two_ell_plus {
        return Err(Error::InvalidLabel(format!(
            "dyad ({}, {}) does not belong to the block ({}, {})",
            minus.ell(),
            plus.ell(),
            basis.two_ell_minus as f64 / 2.0,
            basis.two_ell_plus as f64 / 2.0
        )));
    }
    basis
        .operators
        .iter()
        .map(|t| {
            let c = if t.two_m == minus.two_m - plus.two_m {
                rank_normalization(t.two_rank, basis.two_ell_minus)
                    * clebsch_gordan(plus, AngularMomentumLabel::new(t.two_rank, t.two_m)?, minus)?
            } else {
                0.0
            };
            Ok((t.two_rank, t.two_m, c))
        })
        .collect()
}

/// `|l- m-><l+ m+|` as a matrix.
pub fn dyad_matrix(minus: AngularMomentumLabel, plus: AngularMomentumLabel) -> Array2<Complex64> {
    let mut d = Array2::zeros((multiplet_dim(minus.two_ell), multiplet_dim(plus.two_ell)));
    d[[minus.index(), plus.index()]] = Complex64::new(1.0, 0.0);
    d
}

/// `max || D^{l-} T_m D^{l+ dagger} - Sum_m' D^l_{m' m} T_m' ||_F` over the
/// basis.
pub fn covariance_defect(basis: &TensorOperatorBasis, angles: EulerAngles) -> f64 {
    let dm = wigner_big_d(basis.two_ell_minus, angles);
    let dp_dag = wigner_big_d(basis.two_ell_plus, angles).t().mapv(|z| z.conj());
    let mut worst: f64 = 0.0;
    for two_rank in ranks_of(basis) {
        let dl = wigner_big_d(two_rank, angles);
        for (col, two_m) in m_values(two_rank).enumerate() {
            let Some(t) = basis.get(two_rank, two_m) else { continue };
            let rotated = dm.dot(&t.matrix).dot(&dp_dag);
            let mut expected: Array2<Complex64> = Array2::zeros(rotated.raw_dim());
            for (row, two_mp) in m_values(two_rank).enumerate() {
                if let Some(tp) = basis.get(two_rank, two_mp) {
                    expected.scaled_add(dl[[row, col]], &tp.matrix);
                }
            }
            let defect = (&rotated - &expected).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(defect);
        }
    }
    worst
}

/// `max |Sum_{m1,m2} C(l1 m1 l2 m2|l m) C(l1 m1 l2 m2|l' m') - delta|` over all
/// `l1, l2` up to `two_lmax` (doubled).
pub fn cg_orthogonality_defect(two_lmax: u32) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in 0..=two_lmax {
        for b in 0..=two_lmax {
            let couplings: Vec<(u32, i32)> = ranks(a, b).flat_map(|l| m_values(l).map(move |m| (l, m))).collect();
            for &(l, m) in &couplings {
                for &(lp, mp) in &couplings {
                    let mut s = 0.0;
                    for m1 in m_values(a) {
                        for m2 in m_values(b) {
                            if m1 + m2 == m && m1 + m2 == mp {
                                s += cg(a, m1, b, m2, l, m)? * cg(a, m1, b, m2, lp, mp)?;
                            }
                        }
                    }
                    let delta = if (l, m) == (lp, mp) { 1.0 } else { 0.0 };
                    worst = worst.max((s - delta).abs());
                }
            }
        }
    }
    Ok(worst)
}

pub const CG_HEADER: &str = "j1,m1,j2,m2,j,m,value";

/// CSV table of every nonzero coefficient with `j1, j2 <= lmax`, written
/// with 17 significant digits.
pub fn write_cg_table<W: Write>(out: &mut W, two_lmax: u32) -> Result<usize> {
    let io = |e: std::io::Error| Error::InvalidConfig(e.to_string());
    writeln!(out, "{CG_HEADER}").map_err(io)?;
    let mut rows = 0;
    for a in 0..=two_lmax {
        for b in 0..=two_lmax {
            for l in ranks(a, b) {
                for m1 in m_values(a) {
                    for m2 in m_values(b) {
                        let m = m1 + m2;
                        if m.unsigned_abs() > l {
                            continue;
                        }
                        let v = cg(a, m1, b, m2, l, m)?;
                        if v != 0.0 {
                            writeln!(
                                out,
                                "{},{},{},{},{},{},{:.16e}",
                                a as f64 / 2.0,
                                m1 as f64 / 2.0,
                                b as f64 / 2.0,
                                m2 as f64 / 2.0,
                                l as f64 / 2.0,
                                m as f64 / 2.0,
                                v
                            )
                            .map_err(io)?;
                            rows += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}
