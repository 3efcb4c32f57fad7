//! Likelihood-ratio spectra: finite distributions over [`LrValue`].
//!
//! A spectrum is the law of a decoding-metric likelihood ratio under some
//! channel's all-zero-input output measure. Points are sorted by value,
//! values are pairwise distinct, masses are positive rationals summing to
//! exactly one.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact::Rational;
use crate::lr::LrValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("spectrum mass for {lr} is negative")]
    NegativeMass { lr: String },
    #[error("spectrum masses sum to {total}, expected 1")]
    NotNormalized { total: String },
}

/// Probability distribution over exact likelihood-ratio values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LrSpectrum {
    points: Vec<(LrValue, Rational)>,
}

impl LrSpectrum {
    /// Builds a spectrum from arbitrary (value, mass) pairs: equal values
    /// are merged exactly, zero masses are dropped, the result is sorted
    /// and checked to sum to one.
    pub fn from_unmerged<I>(points: I) -> Result<LrSpectrum, SpectrumError>
    where
        I: IntoIterator<Item = (LrValue, Rational)>,
    {
        let mut merged: BTreeMap<LrValue, Rational> = BTreeMap::new();
        for (lr, mass) in points {
            if mass.is_negative() {
                return Err(SpectrumError::NegativeMass { lr: lr.to_string() });
            }
            if mass.is_zero() {
                continue;
            }
            *merged.entry(lr).or_insert_with(Rational::zero) += mass;
        }
        let total: Rational = merged.values().cloned().sum();
        if !total.is_one() {
            return Err(SpectrumError::NotNormalized {
                total: total.to_string(),
            });
        }
        Ok(LrSpectrum {
            points: merged.into_iter().collect(),
        })
    }

    /// Point mass at a single value.
    pub fn dirac(lr: LrValue) -> LrSpectrum {
        LrSpectrum {
            points: vec![(lr, Rational::one())],
        }
    }

    /// Transform-internal constructor: points must already be sorted,
    /// distinct, and positive with total mass one. Checked in debug builds.
    pub(crate) fn from_sorted_unchecked(points: Vec<(LrValue, Rational)>) -> LrSpectrum {
        debug_assert!(points.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(points.iter().all(|(_, m)| m.is_positive()));
        let spectrum = LrSpectrum { points };
        debug_assert!(spectrum.total_mass().is_one());
        spectrum
    }

    pub fn points(&self) -> &[(LrValue, Rational)] {
        &self.points
    }

    pub fn support_len(&self) -> usize {
        self.points.len()
    }

    /// Mass at an exact value; zero when the value is absent.
    pub fn mass_of(&self, lr: &LrValue) -> Rational {
        self.points
            .binary_search_by(|(v, _)| v.cmp(lr))
            .map(|i| self.points[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// Exact total mass, accumulated over the common denominator so large
    /// supports stay cheap.
    pub fn total_mass(&self) -> Rational {
        use num_bigint::{BigInt, BigUint, Sign};
        let mut denom = BigUint::from(1u32);
        for (_, m) in &self.points {
            denom = num_integer::lcm(denom, m.denom().magnitude().clone());
        }
        let mut num = BigUint::from(0u32);
        for (_, m) in &self.points {
            num += m.numer().magnitude() * (&denom / m.denom().magnitude());
        }
        Rational::new(
            BigInt::from_biguint(Sign::Plus, num),
            BigInt::from_biguint(Sign::Plus, denom),
        )
    }

    pub fn has_infinite_atom(&self) -> bool {
        self.points.iter().any(|(v, _)| *v == LrValue::Infinity)
    }

    /// Checks the reciprocal mass balance of symmetric-channel spectra:
    /// mass(l) = (1/l) * mass(1/l) for every finite l, with absent values
    /// carrying zero mass, and no infinite atom present.
    pub fn is_reciprocal_balanced(&self) -> bool {
        if self.has_infinite_atom() {
            return false;
        }
        self.points.iter().all(|(v, mass)| match v {
            LrValue::Finite(l) => {
                let mirror = self.mass_of(&v.recip());
                *mass == l.recip() * mirror
            }
            // A zero atom mirrors the infinite value, which must have
            // zero mass under the input-0 measure.
            LrValue::Zero => true,
            LrValue::Infinity => unreachable!(),
        })
    }
}

impl Serialize for LrSpectrum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<[String; 2]> = self
            .points
            .iter()
            .map(|(v, m)| [v.to_string(), m.to_string()])
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LrSpectrum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let rows: Vec<[String; 2]> = Vec::deserialize(deserializer)?;
        let mut points = Vec::with_capacity(rows.len());
        for [lr, mass] in rows {
            let lr: LrValue = lr.parse().map_err(D::Error::custom)?;
            let mass = crate::exact::parse_rational(&mass).map_err(D::Error::custom)?;
            points.push((lr, mass));
        }
        LrSpectrum::from_unmerged(points).map_err(D::Error::custom)
    }
}
