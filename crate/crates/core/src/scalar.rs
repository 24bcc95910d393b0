//! Numbers that are either exact rationals or floats.
//!
//! Every matrix entry, row sum and series coefficient is a [`Scalar`]. Binary
//! operations between two exact values stay exact; as soon as one operand is a
//! float the result degrades to a float.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

#[derive(Clone, Debug)]
pub enum Scalar {
    /// Always reduced with a positive denominator (guaranteed by `BigRational`).
    Exact(BigRational),
    Float(f64),
}

/// Relative tolerance used by every sign and zero decision in float mode.
///
/// Exact values ignore it entirely.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(eps: f64) -> Self {
        Tolerance { eps }
    }

    /// Sign of `x`, treating floats with `|x| <= eps * scale` as zero.
    pub fn sign(&self, x: &Scalar, scale: f64) -> Ordering {
        match x {
            Scalar::Exact(r) => r.cmp(&BigRational::zero()),
            Scalar::Float(f) => {
                if f.abs() <= self.eps * scale.abs() {
                    Ordering::Equal
                } else if *f > 0.0 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    pub fn is_zero(&self, x: &Scalar, scale: f64) -> bool {
        self.sign(x, scale) == Ordering::Equal
    }

    pub fn is_positive(&self, x: &Scalar, scale: f64) -> bool {
        self.sign(x, scale) == Ordering::Greater
    }

    pub fn is_negative(&self, x: &Scalar, scale: f64) -> bool {
        self.sign(x, scale) == Ordering::Less
    }

    /// Sign of `a - b` under the same policy, with `scale` taken from the inputs.
    pub fn compare(&self, a: &Scalar, b: &Scalar) -> Ordering {
        let scale = a.abs_f64().max(b.abs_f64());
        self.sign(&(a - b), scale)
    }
}

impl Scalar {
    pub fn zero(exact: bool) -> Self {
        if exact {
            Scalar::Exact(BigRational::zero())
        } else {
            Scalar::Float(0.0)
        }
    }

    pub fn one(exact: bool) -> Self {
        if exact {
            Scalar::Exact(BigRational::one())
        } else {
            Scalar::Float(1.0)
        }
    }

    pub fn int(v: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    /// Exact `num / den`. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn float(v: f64) -> Self {
        Scalar::Float(v)
    }

    /// Same value in the requested mode.
    pub fn with_exactness(self, exact: bool) -> Self {
        if exact {
            self
        } else {
            self.to_float()
        }
    }

    /// Integer at the exactness of `self`.
    pub fn int_like(&self, v: i64) -> Self {
        match self {
            Scalar::Exact(_) => Scalar::int(v),
            Scalar::Float(_) => Scalar::Float(v as f64),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_float(&self) -> Self {
        Scalar::Float(self.to_f64())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Float(f) => *f,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn abs(&self) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(f) => Scalar::Float(f.abs()),
        }
    }

    pub fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Exact zero test; floats compare against literal `0.0`.
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(f) => *f == 0.0,
        }
    }

    pub fn signum(&self) -> Ordering {
        match self {
            Scalar::Exact(r) => r.cmp(&BigRational::zero()),
            Scalar::Float(f) => f.partial_cmp(&0.0).unwrap_or(Ordering::Equal),
        }
    }

    pub fn recip(&self) -> Result<Self, Error> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match self {
            Scalar::Exact(r) => Scalar::Exact(r.recip()),
            Scalar::Float(f) => Scalar::Float(1.0 / f),
        })
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Result<Self, Error> {
        Ok(self * &rhs.recip()?)
    }

    pub fn pow(&self, k: u32) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::Exact(num_traits::pow(r.clone(), k as usize)),
            Scalar::Float(f) => Scalar::Float(f.powi(k as i32)),
        }
    }

    /// Natural logarithm as a float. Exact arguments are evaluated without
    /// overflowing through `f64`, so very large or very small rationals are safe.
    pub fn ln(&self) -> f64 {
        match self {
            Scalar::Exact(r) => ln_bigint(r.numer()) - ln_bigint(r.denom()),
            Scalar::Float(f) => f.ln(),
        }
    }

    pub fn sqrt_f64(&self) -> f64 {
        self.to_f64().sqrt()
    }

    /// Exact rational from a decimal or fraction literal: `"15/7"`, `"-3"`,
    /// `"0.125"`, `"1e-3"`.
    pub fn parse_exact(text: &str) -> Result<Self, Error> {
        let s = text.trim();
        let bad = || Error::Parse(format!("not a rational number: {text:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {text:?}")));
            }
            return Ok(Scalar::Exact(BigRational::new(n, d)));
        }
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let all_digits = format!("{int_part}{frac_part}");
        let mut numer = BigInt::from_str(&all_digits).map_err(|_| bad())?;
        if negative {
            numer = -numer;
        }
        let scale = exponent - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let value = if scale >= 0 {
            BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Scalar::Exact(value))
    }
}

fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top: BigInt = v >> shift;
    top.to_f64().map(f64::ln).unwrap_or(f64::NAN) + shift as f64 * std::f64::consts::LN_2
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * (ln_bigint(&r.numer().abs()) - ln_bigint(r.denom())).exp()
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<BigRational> for Scalar {
    fn from(v: BigRational) -> Self {
        Scalar::Exact(v)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a> $trait<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                (&self) $op rhs
            }
        }
        impl<'a> $trait<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self $op &rhs
            }
        }
    };
}

binary_op!(Add, add, +);
binary_op!(Sub, sub, -);
binary_op!(Mul, mul, *);

// Panics on an exact zero divisor, like the underlying rational type.
// Use `checked_div` where the divisor is not known to be nonzero.
binary_op!(Div, div, /);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(f) => Scalar::Float(-f),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(true), |acc, x| acc + x)
    }
}
