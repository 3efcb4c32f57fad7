//! Exact rational arithmetic helpers shared across the crate.
//!
//! All probability masses are [`Rational`] values and every probability-level
//! statement in this crate is decided by exact comparison. The only
//! non-rational quantity anywhere is the Bhattacharyya sum, which is handled
//! through [`Enclosure`], a certified interval with directed rounding.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number used for all probability masses.
pub type Rational = num_rational::BigRational;

/// Shorthand constructor, mostly for tests and fixed constants.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Error raised when a string cannot be read as an exact rational.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{input}`: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: String,
}

fn parse_err(input: &str, reason: &str) -> ParseRationalError {
    ParseRationalError {
        input: input.to_string(),
        reason: reason.to_string(),
    }
}

/// Parses `p/q`, integer, and decimal literals into an exact rational.
///
/// Decimal literals convert exactly: `"0.3"` becomes `3/10`, never a float.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err(parse_err(s, "empty string"));
    }
    if let Some((num, den)) = trimmed.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| parse_err(s, "numerator is not an integer"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| parse_err(s, "denominator is not an integer"))?;
        if d.is_zero() {
            return Err(parse_err(s, "denominator is zero"));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = trimmed.split_once('.') {
        let (sign, int_digits) = match int_part.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, int_part.strip_prefix('+').unwrap_or(int_part)),
        };
        let int_digits = if int_digits.is_empty() { "0" } else { int_digits };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(s, "fractional part is not a digit string"));
        }
        let int_val: BigInt = int_digits
            .parse()
            .map_err(|_| parse_err(s, "integer part is not a digit string"))?;
        let frac_val: BigInt = frac_part
            .parse()
            .map_err(|_| parse_err(s, "fractional part is not a digit string"))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let combined = int_val * &scale + frac_val;
        return Ok(Rational::new(combined * BigInt::from(sign), scale));
    }
    let n: BigInt = trimmed
        .parse()
        .map_err(|_| parse_err(s, "not an integer, fraction, or decimal"))?;
    Ok(Rational::from_integer(n))
}

/// True when `r` lies in the closed interval [0, 1].
pub fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

/// Renders `r` as a decimal string with `digits` fractional digits,
/// rounded toward negative infinity.
pub fn decimal_floor(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (r * &scale).floor().to_integer();
    let negative = scaled.is_negative();
    let abs = scaled.magnitude().clone();
    let (int_part, frac_part) = abs.div_rem(&scale.magnitude().clone());
    let frac_str = format!("{:0>width$}", frac_part.to_string(), width = digits);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_str}")
    }
}

/// Field (de)serialization of rationals as exact `p/q` strings.
pub mod serde_rational {
    use super::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Like [`serde_rational`] for optional fields.
pub mod serde_rational_opt {
    use super::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        value: &Option<Rational>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(r) => serializer.serialize_some(&r.to_string()),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(deserializer)?;
        s.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Certified enclosure `[lo, hi]` of a real number, with exact rational
/// endpoints. Directed rounding keeps the true value inside the interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl serde::Serialize for Enclosure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Enclosure", 2)?;
        s.serialize_field("lo", &self.lo.to_string())?;
        s.serialize_field("hi", &self.hi.to_string())?;
        s.end()
    }
}

impl Enclosure {
    pub fn point(value: Rational) -> Self {
        Enclosure {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn zero() -> Self {
        Enclosure::point(Rational::zero())
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(BigInt::from(2))
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    /// Squares an enclosure of a non-negative quantity.
    pub fn square_nonneg(&self) -> Enclosure {
        debug_assert!(!self.lo.is_negative());
        Enclosure {
            lo: &self.lo * &self.lo,
            hi: &self.hi * &self.hi,
        }
    }

    /// Sign of the enclosed value, when the interval determines it.
    pub fn definite_sign(&self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering;
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Largest possible distance from any point of `self` to any point of
    /// `other`; a certified bound on |x - y| for enclosed x, y.
    pub fn max_distance(&self, other: &Enclosure) -> Rational {
        let a = (&self.hi - &other.lo).abs();
        let b = (&other.hi - &self.lo).abs();
        a.max(b)
    }

    /// Decimal rendering of the midpoint with `digits` fractional digits.
    pub fn decimal(&self, digits: usize) -> String {
        decimal_floor(&self.midpoint(), digits)
    }
}

/// Certified enclosure of sqrt(r) for a non-negative rational, with absolute
/// width at most 10^-digits.
pub fn sqrt_enclosure(r: &Rational, digits: usize) -> Enclosure {
    assert!(!r.is_negative(), "square root of a negative rational");
    if r.is_zero() {
        return Enclosure::zero();
    }
    let p = r.numer().magnitude();
    let q = r.denom().magnitude();
    let scale = BigUint::from(10u32).pow(digits as u32);
    // sqrt(p/q) = sqrt(p*q)/q; floor integer sqrt gives the directed bounds.
    let scaled = p * q * (&scale * &scale);
    let root_lo = scaled.sqrt();
    if &root_lo * &root_lo == scaled {
        // Perfect square: the root is rational and the enclosure is a point.
        let exact = Rational::new(
            BigInt::from_biguint(Sign::Plus, root_lo),
            BigInt::from_biguint(Sign::Plus, q * scale),
        );
        return Enclosure::point(exact);
    }
    let root_hi = &root_lo + BigUint::one();
    let den = BigInt::from_biguint(Sign::Plus, q * scale);
    Enclosure {
        lo: Rational::new(BigInt::from_biguint(Sign::Plus, root_lo), den.clone()),
        hi: Rational::new(BigInt::from_biguint(Sign::Plus, root_hi), den),
    }
}
