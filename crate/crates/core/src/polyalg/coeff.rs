use std::fmt;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Coefficient field for [`super::Poly`].
///
/// Implemented for exact rationals and IEEE doubles.
pub trait Coeff:
    Num + Neg<Output = Self> + Clone + PartialEq + fmt::Debug + Send + Sync + 'static
{
    fn from_int(n: i64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn is_negative(&self) -> bool;
    /// Parses a numeric literal such as `12`, `0.25` or `1e-3`.
    fn parse_literal(s: &str) -> Option<Self>;
    fn write_literal(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result;
}

impl Coeff for Rational {
    fn from_int(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn parse_literal(s: &str) -> Option<Self> {
        parse_decimal(s)
    }
    fn write_literal(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Coeff for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    fn parse_literal(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn write_literal(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Correctly scaled conversion that survives huge numerators and denominators.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 1e300 && d < 1e300 {
            return n / d;
        }
    }
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift > 0 {
        Rational::new(q.numer().clone(), q.denom().clone() << shift as usize)
    } else {
        Rational::new(q.numer().clone() << (-shift) as usize, q.denom().clone())
    };
    let v = scaled.to_integer().to_f64().unwrap_or(f64::NAN);
    v * 2f64.powi(shift as i32)
}

/// Exact value of a finite double.
pub fn f64_to_rational(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Small constructor used all over the crate.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p`, `p/q`, decimals and scientific notation exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim())?;
        let d = parse_decimal(d.trim())?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", int_part, frac_part);
    let mut value = Rational::from_integer(BigInt::parse_bytes(digits.as_bytes(), 10)?);
    let e = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    if e >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, e as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-e) as usize));
    }
    Some(if neg { -value } else { value })
}

/// `q^k` for a possibly negative integer exponent.
pub fn rational_powi(q: &Rational, k: i32) -> Rational {
    if k >= 0 {
        num_traits::pow(q.clone(), k as usize)
    } else {
        num_traits::pow(q.recip(), (-k) as usize)
    }
}

pub fn rational_abs(q: &Rational) -> Rational {
    q.abs()
}
