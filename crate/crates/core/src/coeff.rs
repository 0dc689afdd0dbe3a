//! Coefficient rings for polynomials: exact rationals and doubles.
//!
//! The coefficient mode is carried by the type parameter of
//! [`MultiPoly`](crate::polynomial::MultiPoly), so polynomials of different
//! modes cannot be combined by construction.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffMode {
    Exact,
    Float,
}

pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    const MODE: CoeffMode;

    fn from_i64(value: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Parses a decimal literal (`-1.25`, `3e-2`) or a fraction (`3/4`).
    fn parse_literal(text: &str) -> Result<Self>;

    fn is_negative(&self) -> bool;

    fn abs(&self) -> Self;

    fn hash_coeff<H: Hasher>(&self, state: &mut H);
}

impl Coeff for f64 {
    const MODE: CoeffMode = CoeffMode::Float;

    fn from_i64(value: i64) -> Self {
        value as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_literal(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some((num, den)) = t.split_once('/') {
            let n: f64 = num
                .trim()
                .parse()
                .map_err(|_| Error::parse("number", text, "bad numerator"))?;
            let d: f64 = den
                .trim()
                .parse()
                .map_err(|_| Error::parse("number", text, "bad denominator"))?;
            if d == 0.0 {
                return Err(Error::parse("number", text, "zero denominator"));
            }
            return Ok(n / d);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::parse("number", text, "not a decimal literal"))?;
        if !v.is_finite() {
            return Err(Error::parse("number", text, "non-finite value"));
        }
        Ok(v)
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn hash_coeff<H: Hasher>(&self, state: &mut H) {
        // -0.0 and 0.0 compare equal, so they must hash equal
        let v = if *self == 0.0 { 0.0f64 } else { *self };
        v.to_bits().hash(state);
    }
}

impl Coeff for Rational {
    const MODE: CoeffMode = CoeffMode::Exact;

    fn from_i64(value: i64) -> Self {
        Rational::from_integer(BigInt::from(value))
    }

    fn to_f64(&self) -> f64 {
        // numerator/denominator may each overflow f64 while the ratio does not
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => ratio_to_f64_scaled(self),
        }
    }

    fn parse_literal(text: &str) -> Result<Self> {
        parse_rational(text)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn hash_coeff<H: Hasher>(&self, state: &mut H) {
        self.hash(state);
    }
}

fn ratio_to_f64_scaled(r: &Rational) -> f64 {
    let n_bits = r.numer().bits() as i64;
    let d_bits = r.denom().bits() as i64;
    let shift = n_bits - d_bits - 60;
    let scaled = if shift > 0 {
        r / Rational::from_integer(BigInt::one() << (shift as usize))
    } else {
        r * Rational::from_integer(BigInt::one() << ((-shift) as usize))
    };
    let base = scaled.to_integer().to_f64().unwrap_or(f64::NAN);
    base * 2f64.powi(shift as i32)
}

fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::parse("rational", text, "empty literal"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return Err(Error::parse("rational", text, "zero denominator"));
        }
        return Ok(n / d);
    }

    let (negative, body) = match t.as_bytes()[0] {
        b'-' => (true, &t[1..]),
        b'+' => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = body[pos + 1..]
                .parse()
                .map_err(|_| Error::parse("rational", text, "bad exponent"))?;
            (&body[..pos], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::parse("rational", text, "missing digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(Error::parse("rational", text, "unexpected character"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits
        .parse()
        .map_err(|_| Error::parse("rational", text, "bad digits"))?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Converts a finite double to the rational with the same binary value.
pub fn rational_from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}
