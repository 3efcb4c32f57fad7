//! Extended likelihood-ratio values.
//!
//! A likelihood ratio is the quotient of two output probabilities, so the
//! value set is the non-negative rationals extended with infinity. Zero and
//! infinity are kept as explicit variants; finite values are strictly
//! positive rationals in lowest terms.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exact::{parse_rational, Rational};

/// Likelihood ratio: zero, a positive rational, or infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LrValue {
    Zero,
    Finite(Rational),
    Infinity,
}

impl LrValue {
    /// Canonical constructor from a rational; zero collapses to `Zero`.
    ///
    /// Panics on negative input: a likelihood ratio is a quotient of
    /// probabilities and can never be negative.
    pub fn from_rational(r: Rational) -> LrValue {
        assert!(!r.is_negative(), "likelihood ratio must be non-negative");
        if r.is_zero() {
            LrValue::Zero
        } else {
            LrValue::Finite(r)
        }
    }

    /// Ratio `p1 / p0` of two non-negative probabilities.
    /// Returns `None` for the indeterminate case 0/0.
    pub fn from_ratio(p1: &Rational, p0: &Rational) -> Option<LrValue> {
        match (p1.is_zero(), p0.is_zero()) {
            (true, true) => None,
            (true, false) => Some(LrValue::Zero),
            (false, true) => Some(LrValue::Infinity),
            (false, false) => Some(LrValue::Finite(p1 / p0)),
        }
    }

    pub fn one() -> LrValue {
        LrValue::Finite(Rational::one())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, LrValue::Finite(r) if r.is_one())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, LrValue::Finite(_))
    }

    /// Exact comparison against 1, the decision threshold.
    pub fn cmp_one(&self) -> Ordering {
        match self {
            LrValue::Zero => Ordering::Less,
            LrValue::Finite(r) => r.cmp(&Rational::one()),
            LrValue::Infinity => Ordering::Greater,
        }
    }

    /// Multiplicative inverse; zero and infinity swap.
    pub fn recip(&self) -> LrValue {
        match self {
            LrValue::Zero => LrValue::Infinity,
            LrValue::Finite(r) => LrValue::Finite(r.recip()),
            LrValue::Infinity => LrValue::Zero,
        }
    }

    /// Product of two extended values; `None` for the indeterminate 0 * inf.
    pub fn checked_mul(&self, other: &LrValue) -> Option<LrValue> {
        use LrValue::*;
        match (self, other) {
            (Zero, Infinity) | (Infinity, Zero) => None,
            (Zero, _) | (_, Zero) => Some(Zero),
            (Infinity, _) | (_, Infinity) => Some(Infinity),
            (Finite(a), Finite(b)) => Some(LrValue::from_rational(a * b)),
        }
    }

    /// The combination `(a + b) / (1 + a b)` of the first polar transform.
    ///
    /// The extended cases are the limits of the finite formula and agree
    /// with the underlying channel expression
    /// `(p1 q0 + p0 q1) / (p0 q0 + p1 q1)`, so the table is total:
    /// a sure bit forces the combined bit through the XOR constraint.
    pub fn minus_combine(&self, other: &LrValue) -> LrValue {
        use LrValue::*;
        match (self, other) {
            (Zero, Zero) => Zero,
            (Zero, Finite(b)) | (Finite(b), Zero) => Finite(b.clone()),
            (Zero, Infinity) | (Infinity, Zero) => Infinity,
            (Infinity, Infinity) => Zero,
            (Infinity, Finite(b)) | (Finite(b), Infinity) => Finite(b.recip()),
            (Finite(a), Finite(b)) => {
                let num = a + b;
                let den = Rational::one() + a * b;
                LrValue::from_rational(num / den)
            }
        }
    }

    /// Finite payload, if any.
    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            LrValue::Finite(r) => Some(r),
            _ => None,
        }
    }
}

impl PartialOrd for LrValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LrValue {
    fn cmp(&self, other: &Self) -> Ordering {
        use LrValue::*;
        match (self, other) {
            (Zero, Zero) | (Infinity, Infinity) => Ordering::Equal,
            (Zero, _) | (_, Infinity) => Ordering::Less,
            (_, Zero) | (Infinity, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for LrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LrValue::Zero => write!(f, "0"),
            LrValue::Finite(r) => write!(f, "{r}"),
            LrValue::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for LrValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(LrValue::Infinity);
        }
        let r = parse_rational(t).map_err(|e| e.to_string())?;
        if r.is_negative() {
            return Err(format!("likelihood ratio `{t}` is negative"));
        }
        Ok(LrValue::from_rational(r))
    }
}

impl Serialize for LrValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LrValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
