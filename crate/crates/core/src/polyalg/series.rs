//! Exact Legendre series over the rationals and the transform operator.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::legendre::legendre_series_eval;
use crate::error::{Error, Result};

/// Shorthand for an exact rational `num / den`.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parity of a polynomial about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// A polynomial `sum_j c_j L_j(x)` with exact rational coefficients.
///
/// Trailing zero coefficients are never stored, so the coefficient vector is
/// empty exactly for the zero polynomial and `degree()` is the index of the
/// last entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LegendreCoeffs {
    coeffs: Vec<BigRational>,
}

impl LegendreCoeffs {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// The single Legendre polynomial `L_j`.
    pub fn basis(j: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); j + 1];
        coeffs[j] = BigRational::one();
        Self { coeffs }
    }

    pub fn from_i64_ratios(pairs: &[(i64, i64)]) -> Self {
        Self::new(pairs.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> BigRational {
        self.coeffs.get(j).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Mean value over [-1, 1], which is the `L_0` coefficient.
    pub fn mean(&self) -> BigRational {
        self.coeff(0)
    }

    pub fn parity(&self) -> Parity {
        let odd_zero = self.coeffs.iter().skip(1).step_by(2).all(Zero::is_zero);
        let even_zero = self.coeffs.iter().step_by(2).all(Zero::is_zero);
        match (odd_zero, even_zero) {
            (true, _) => Parity::Even,
            (false, true) => Parity::Odd,
            (false, false) => Parity::Mixed,
        }
    }

    /// Exact derivative, using `L_n' = sum_{j = n-1, n-3, ...} (2j+1) L_j`.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); n - 1];
        for (deg, c) in self.coeffs.iter().enumerate().skip(1) {
            if c.is_zero() {
                continue;
            }
            let mut j = deg as i64 - 1;
            while j >= 0 {
                out[j as usize] += c * BigRational::from_integer(BigInt::from(2 * j + 1));
                j -= 2;
            }
        }
        Self::new(out)
    }

    /// Multiplication by `x`: `x L_j = ((j+1) L_{j+1} + j L_{j-1}) / (2j+1)`.
    pub fn mul_x(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let denom = BigInt::from(2 * j + 1);
            out[j + 1] += c * BigRational::new(BigInt::from(j + 1), denom.clone());
            if j > 0 {
                out[j - 1] += c * BigRational::new(BigInt::from(j), denom);
            }
        }
        Self::new(out)
    }

    /// Exact value at a rational point via the three-term recurrence.
    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        let mut prev = BigRational::zero();
        let mut curr = BigRational::one();
        for (n, c) in self.coeffs.iter().enumerate() {
            acc += c * &curr;
            let nb = BigRational::from_integer(BigInt::from(n));
            let next = (BigRational::from_integer(BigInt::from(2 * n + 1)) * x * &curr - &nb * &prev)
                / (nb + BigRational::one());
            prev = curr;
            curr = next;
        }
        acc
    }

    /// Coefficients rounded to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational_to_f64).collect()
    }

    /// Floating value at `x`, evaluated in the Legendre basis.
    pub fn eval(&self, x: f64) -> f64 {
        legendre_series_eval(&self.to_f64(), x)
    }

    /// Monomial coefficients in ascending powers.
    pub fn to_monomial(&self) -> Vec<BigRational> {
        let n = self.coeffs.len();
        let mut out = vec![BigRational::zero(); n];
        if n == 0 {
            return out;
        }
        let mut prev: Vec<BigRational> = Vec::new();
        let mut curr = vec![BigRational::one()];
        for (deg, c) in self.coeffs.iter().enumerate() {
            for (o, l) in out.iter_mut().zip(&curr) {
                *o += c * l;
            }
            if deg + 1 == n {
                break;
            }
            // L_{deg+1} = ((2 deg + 1) x L_deg - deg L_{deg-1}) / (deg + 1)
            let a = rat(2 * deg as i64 + 1, deg as i64 + 1);
            let b = rat(deg as i64, deg as i64 + 1);
            let mut next = vec![BigRational::zero(); curr.len() + 1];
            for (i, v) in curr.iter().enumerate() {
                next[i + 1] += &a * v;
            }
            for (i, v) in prev.iter().enumerate() {
                next[i] -= &b * v;
            }
            prev = curr;
            curr = next;
        }
        out
    }

    /// Inverse of [`to_monomial`](Self::to_monomial), by Horner's scheme in
    /// the Legendre basis.
    pub fn from_monomial(mono: &[BigRational]) -> Self {
        let mut acc = Self::zero();
        for a in mono.iter().rev() {
            acc = acc.mul_x();
            if !a.is_zero() {
                acc = &acc + &Self::new(vec![a.clone()]);
            }
        }
        acc
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scale(&self, factor: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    // Fall back on a scaled division when numerator or denominator overflow.
    let shift = r.numer().bits() as i64 - r.denom().bits() as i64;
    let (num, den) = if shift > 0 {
        (r.numer().clone(), r.denom() << (shift as usize))
    } else {
        (r.numer() << ((-shift) as usize), r.denom().clone())
    };
    let num_f = scaled(&num);
    let den_f = scaled(&den);
    (num_f.0 / den_f.0) * 2f64.powi((num_f.1 - den_f.1 + shift) as i32)
}

fn scaled(v: &BigInt) -> (f64, i64) {
    let bits = v.bits() as i64;
    let drop = (bits - 60).max(0);
    let trimmed: BigInt = v >> (drop as usize);
    (trimmed.to_f64().unwrap_or(0.0), drop)
}

/// Applies the transform `F` once:
/// `F(L_1) = L_2 / 3` and `F(L_j) = (L_{j+1} - L_{j-1}) / (2j + 1)` for `j >= 2`.
///
/// `F` is the antiderivative with zero mean, so it is undefined on constants.
pub fn f_apply(p: &LegendreCoeffs) -> Result<LegendreCoeffs> {
    if !p.coeff(0).is_zero() {
        return Err(Error::ConstantTerm);
    }
    let Some(deg) = p.degree() else {
        return Ok(LegendreCoeffs::zero());
    };
    let mut out = vec![BigRational::zero(); deg + 2];
    for (j, c) in p.coeffs().iter().enumerate().skip(1) {
        if c.is_zero() {
            continue;
        }
        let w = c / BigRational::from_integer(BigInt::from(2 * j + 1));
        out[j + 1] += &w;
        if j >= 2 {
            out[j - 1] -= &w;
        }
    }
    Ok(LegendreCoeffs::new(out))
}

/// `F^m(L_1)`, a polynomial of degree `m + 1`.
pub fn f_power_l1(m: usize) -> LegendreCoeffs {
    let mut p = LegendreCoeffs::basis(1);
    for _ in 0..m {
        // Every iterate after L_1 has zero mean, so the constant check cannot fire.
        p = f_apply(&p).expect("iterates of F have no constant term");
    }
    p
}

impl Add for &LegendreCoeffs {
    type Output = LegendreCoeffs;

    fn add(self, rhs: Self) -> LegendreCoeffs {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        LegendreCoeffs::new((0..n).map(|j| self.coeff(j) + rhs.coeff(j)).collect())
    }
}

impl Sub for &LegendreCoeffs {
    type Output = LegendreCoeffs;

    fn sub(self, rhs: Self) -> LegendreCoeffs {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        LegendreCoeffs::new((0..n).map(|j| self.coeff(j) - rhs.coeff(j)).collect())
    }
}

impl Neg for &LegendreCoeffs {
    type Output = LegendreCoeffs;

    fn neg(self) -> LegendreCoeffs {
        LegendreCoeffs::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul<&BigRational> for &LegendreCoeffs {
    type Output = LegendreCoeffs;

    fn mul(self, rhs: &BigRational) -> LegendreCoeffs {
        self.scale(rhs)
    }
}

impl fmt::Display for LegendreCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "({})L{j}", c.abs())?;
            first = false;
        }
        Ok(())
    }
}
