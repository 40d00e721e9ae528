//! Numeric field abstraction shared by the floating-point and exact-rational
//! code paths.
//!
//! Every formula in the kernel, drift calculus and closed forms is written
//! once against [`Scalar`]. Instantiated with `f64` it is the fast path;
//! instantiated with [`Rational`] the same formula yields exact values, which
//! is how martingale zeros and golden values like `6/31` are certified.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

pub trait Scalar: Num + Clone + PartialOrd + fmt::Debug + Send + Sync {
    fn from_usize(n: usize) -> Self;
    fn to_f64(&self) -> f64;

    fn ratio(num: usize, den: usize) -> Self {
        Self::from_usize(num) / Self::from_usize(den)
    }
}

impl Scalar for f64 {
    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn from_usize(n: usize) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {input:?} as an exact number")]
pub struct ParseRationalError {
    pub input: String,
}

/// Parses `"3"`, `"-0.25"`, `"1.5e-3"` or `"6/31"` into an exact rational.
///
/// Decimal literals are read digit by digit so `"0.1"` is exactly one tenth,
/// not the nearest binary double.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&digits).map_err(|_| err())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}
