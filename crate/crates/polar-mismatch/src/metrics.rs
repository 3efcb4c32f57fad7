//! Scalar figures of merit on spectra and the exact algebraic identities
//! relating them across the polar transforms.
//!
//! Everything except the Bhattacharyya sum is an exact rational. The
//! Bhattacharyya sum involves square roots and is reported as a certified
//! enclosure instead of a float.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::evolve::{transform, transform_minus, EvolutionLimits, EvolveError, TransformKind};
use crate::exact::{rat, sqrt_enclosure, Enclosure, Rational};
use crate::lr::LrValue;
use crate::spectrum::LrSpectrum;

/// Default decimal precision for Bhattacharyya enclosures. Wide enough to
/// decide every comparison this crate makes at the 1e-40 tolerance.
pub const DEFAULT_Z_DIGITS: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("bhattacharyya sum diverges: spectrum has positive mass at an infinite ratio")]
    InfiniteAtom,
}

/// Exact partition of a spectrum's mass by comparison with 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TieSplit {
    #[serde(with = "crate::exact::serde_rational")]
    pub p_lt: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub p_eq: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub p_gt: Rational,
}

impl TieSplit {
    /// P[L >= 1].
    pub fn p_ge(&self) -> Rational {
        &self.p_eq + &self.p_gt
    }

    /// P[L <= 1].
    pub fn p_le(&self) -> Rational {
        &self.p_lt + &self.p_eq
    }
}

/// Tie-adjusted decision indicator: 1 above the threshold, 1/2 on it,
/// 0 below.
pub fn h_tie(lr: &LrValue) -> Rational {
    match lr.cmp_one() {
        Ordering::Less => Rational::zero(),
        Ordering::Equal => rat(1, 2),
        Ordering::Greater => Rational::one(),
    }
}

/// Decision-error probability of a spectrum: P[L > 1] + (1/2) P[L = 1].
pub fn pe(s: &LrSpectrum) -> Rational {
    let split = tie_split(s);
    split.p_gt + rat(1, 2) * split.p_eq
}

/// Exact three-way mass partition. Masses are accumulated as integer
/// numerators over the common denominator of the spectrum, which keeps the
/// cost linear even on supports with hundreds of thousands of points.
pub fn tie_split(s: &LrSpectrum) -> TieSplit {
    use num_bigint::{BigInt, BigUint, Sign};
    let points = s.points();
    let mut denom = BigUint::one();
    for (_, m) in points {
        denom = num_integer::lcm(denom, m.denom().magnitude().clone());
    }
    let mut sums = [BigUint::zero(), BigUint::zero(), BigUint::zero()];
    for (lr, m) in points {
        let scaled = m.numer().magnitude() * (&denom / m.denom().magnitude());
        let slot = match lr.cmp_one() {
            Ordering::Less => 0,
            Ordering::Equal => 1,
            Ordering::Greater => 2,
        };
        sums[slot] += scaled;
    }
    let denom = BigInt::from_biguint(Sign::Plus, denom);
    let [lt, eq, gt] = sums;
    TieSplit {
        p_lt: Rational::new(BigInt::from_biguint(Sign::Plus, lt), denom.clone()),
        p_eq: Rational::new(BigInt::from_biguint(Sign::Plus, eq), denom.clone()),
        p_gt: Rational::new(BigInt::from_biguint(Sign::Plus, gt), denom),
    }
}

/// Bhattacharyya sum of a spectrum: the expectation of sqrt(L), as a
/// certified enclosure with at least `digits` correct fractional digits
/// and, for positive values, at least 50 significant digits.
pub fn bhattacharyya(s: &LrSpectrum, digits: usize) -> Result<Enclosure, MetricsError> {
    if s.has_infinite_atom() {
        return Err(MetricsError::InfiniteAtom);
    }
    let mut precision = digits.max(DEFAULT_Z_DIGITS);
    loop {
        let mut total = Enclosure::zero();
        for (lr, mass) in s.points() {
            match lr {
                LrValue::Zero => {}
                LrValue::Finite(r) => {
                    let root = sqrt_enclosure(r, precision);
                    total = total.add(&Enclosure {
                        lo: &root.lo * mass,
                        hi: &root.hi * mass,
                    });
                }
                LrValue::Infinity => unreachable!("checked above"),
            }
        }
        if total.hi.is_zero() {
            return Ok(Enclosure::zero());
        }
        // Refine until the enclosure pins 50+ significant digits.
        let significant_ok = total.lo.is_positive()
            && total.width() * sig_scale() <= total.lo;
        if significant_ok || precision >= 1 << 14 {
            return Ok(total);
        }
        precision *= 2;
    }
}

fn sig_scale() -> Rational {
    Rational::from_integer(num_bigint::BigInt::from(10u8).pow(50))
}

/// The multiplier relating parent and minus-child decision-error
/// differences: (P_s[L<1] + P_t[L<1]) - (P_s[L>1] + P_t[L>1]).
pub fn pe_minus_factor(s: &LrSpectrum, t: &LrSpectrum) -> Rational {
    let a = tie_split(s);
    let b = tie_split(t);
    (&a.p_lt + &b.p_lt) - (&a.p_gt + &b.p_gt)
}

/// Both sides of an exact identity, kept for diagnosability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    #[serde(with = "crate::exact::serde_rational")]
    pub lhs: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub rhs: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub difference: Rational,
    pub holds: bool,
}

impl IdentityReport {
    fn new(lhs: Rational, rhs: Rational) -> IdentityReport {
        let difference = &lhs - &rhs;
        let holds = difference.is_zero();
        IdentityReport {
            lhs,
            rhs,
            difference,
            holds,
        }
    }
}

/// Verifies, exactly, that the minus transform scales the decision-error
/// difference by the factor above:
/// pe(minus(s)) - pe(minus(t)) = (pe(s) - pe(t)) * factor.
pub fn check_pe_minus_recursion(
    s: &LrSpectrum,
    t: &LrSpectrum,
    limits: &EvolutionLimits,
) -> Result<IdentityReport, EvolveError> {
    let lhs = pe(&transform_minus(s, limits)?) - pe(&transform_minus(t, limits)?);
    let rhs = (pe(s) - pe(t)) * pe_minus_factor(s, t);
    Ok(IdentityReport::new(lhs, rhs))
}

/// Verifies the probability-difference identity after one transform:
/// the change in P[L >= 1] between the two measures equals a bilinear
/// form over the parent spectra, computed here by direct enumeration of
/// the product support.
pub fn check_p_diff_identity(
    s: &LrSpectrum,
    t: &LrSpectrum,
    kind: TransformKind,
    limits: &EvolutionLimits,
) -> Result<IdentityReport, EvolveError> {
    let s_child = tie_split(&transform(s, kind, limits)?);
    let t_child = tie_split(&transform(t, kind, limits)?);
    let lhs = s_child.p_ge() - t_child.p_ge();

    // Union support with zero extension for absent values.
    let mut support: Vec<LrValue> = s
        .points()
        .iter()
        .chain(t.points().iter())
        .map(|(v, _)| v.clone())
        .collect();
    support.sort();
    support.dedup();

    let mut rhs = Rational::zero();
    for l1 in &support {
        let diff = s.mass_of(l1) - t.mass_of(l1);
        if diff.is_zero() {
            continue;
        }
        let mut inner = Rational::zero();
        for l2 in &support {
            let combined = match kind {
                TransformKind::Minus => l1.minus_combine(l2),
                TransformKind::Plus => l1
                    .checked_mul(l2)
                    .ok_or(EvolveError::IndeterminateProduct)?,
            };
            if combined.cmp_one() != Ordering::Less {
                inner += s.mass_of(l2) + t.mass_of(l2);
            }
        }
        rhs += diff * inner;
    }
    Ok(IdentityReport::new(lhs, rhs))
}

/// Certified check that the plus transform squares the Bhattacharyya sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZSquaringReport {
    pub z_plus: Enclosure,
    pub z_squared: Enclosure,
    /// Certified bound on |Z_plus - Z^2|.
    #[serde(with = "crate::exact::serde_rational")]
    pub gap_bound: Rational,
    pub holds: bool,
}

pub fn check_z_plus_squaring(
    s: &LrSpectrum,
    digits: usize,
    tolerance: &Rational,
    limits: &EvolutionLimits,
) -> Result<ZSquaringReport, ZSquaringError> {
    let z = bhattacharyya(s, digits)?;
    let plus = transform(s, TransformKind::Plus, limits)?;
    let z_plus = bhattacharyya(&plus, digits)?;
    let z_squared = z.square_nonneg();
    let gap_bound = z_plus.max_distance(&z_squared);
    let holds = gap_bound <= *tolerance;
    Ok(ZSquaringReport {
        z_plus,
        z_squared,
        gap_bound,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZSquaringError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

/// One row of the metric table exposed by the CLI: exact tie masses plus
/// the certified Bhattacharyya rendering.
pub fn metric_csv_row(
    path: &crate::evolve::TransformPath,
    s: &LrSpectrum,
    z_digits_shown: usize,
) -> Result<String, MetricsError> {
    let (n, i) = path.index();
    let split = tie_split(s);
    let z = bhattacharyya(s, DEFAULT_Z_DIGITS)?;
    Ok(format!(
        "{path},{n},{i},{},{},{},{},{}",
        split.p_lt,
        split.p_eq,
        split.p_gt,
        pe(s),
        z.decimal(z_digits_shown)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SymmetricChannel;
    use crate::exact::rat;

    fn fin(n: i64, d: i64) -> LrValue {
        LrValue::from_rational(rat(n, d))
    }

    fn spectrum(points: &[(LrValue, Rational)]) -> LrSpectrum {
        LrSpectrum::from_unmerged(points.to_vec()).unwrap()
    }

    fn mismatched_root() -> LrSpectrum {
        spectrum(&[(fin(1, 4), rat(7, 10)), (fin(4, 1), rat(3, 10))])
    }

    fn metric_root() -> LrSpectrum {
        spectrum(&[
            (fin(1, 4), rat(2, 5)),
            (fin(1, 1), rat(1, 2)),
            (fin(4, 1), rat(1, 10)),
        ])
    }

    #[test]
    fn h_tie_cases() {
        assert_eq!(h_tie(&fin(1, 2)), rat(0, 1));
        assert_eq!(h_tie(&fin(1, 1)), rat(1, 2));
        assert_eq!(h_tie(&fin(7, 3)), rat(1, 1));
        assert_eq!(h_tie(&LrValue::Zero), rat(0, 1));
        assert_eq!(h_tie(&LrValue::Infinity), rat(1, 1));
    }

    #[test]
    fn pe_examples() {
        assert_eq!(pe(&mismatched_root()), rat(3, 10));
        assert_eq!(pe(&metric_root()), rat(7, 20));
        assert_eq!(pe(&LrSpectrum::dirac(LrValue::one())), rat(1, 2));
    }

    #[test]
    fn tie_split_examples() {
        let bsc = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        let split = tie_split(&bsc);
        assert_eq!(
            (split.p_lt, split.p_eq, split.p_gt),
            (rat(7, 10), rat(0, 1), rat(3, 10))
        );
        let limits = EvolutionLimits::default();
        let plus = transform(&bsc, TransformKind::Plus, &limits).unwrap();
        let split = tie_split(&plus);
        assert_eq!(
            (split.p_lt.clone(), split.p_eq.clone(), split.p_gt.clone()),
            (rat(49, 100), rat(21, 50), rat(9, 100))
        );
        assert_eq!(split.p_lt + split.p_eq + split.p_gt, rat(1, 1));
        let tie = tie_split(&LrSpectrum::dirac(LrValue::one()));
        assert_eq!((tie.p_lt, tie.p_eq, tie.p_gt), (rat(0, 1), rat(1, 1), rat(0, 1)));
    }

    #[test]
    fn bhattacharyya_closed_forms() {
        let bsc = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        let z = bhattacharyya(&bsc, 60).unwrap();
        // 2 sqrt(21)/10, squared is 21/25.
        let sq = z.square_nonneg();
        assert!(sq.lo <= rat(21, 25) && rat(21, 25) <= sq.hi);
        assert!(z.decimal(7).starts_with("0.9165151"));

        let tie = bhattacharyya(&LrSpectrum::dirac(LrValue::one()), 60).unwrap();
        assert!(tie.lo <= rat(1, 1) && rat(1, 1) <= tie.hi);
        let zero = bhattacharyya(&LrSpectrum::dirac(LrValue::Zero), 60).unwrap();
        assert_eq!(zero, Enclosure::zero());

        // The mismatched counterexample sum is exactly 0.95.
        let z = bhattacharyya(&mismatched_root(), 60).unwrap();
        assert!(z.lo <= rat(19, 20) && rat(19, 20) <= z.hi);

        let inf = LrSpectrum::from_unmerged(vec![
            (LrValue::Infinity, rat(1, 2)),
            (fin(1, 2), rat(1, 2)),
        ])
        .unwrap();
        assert_eq!(bhattacharyya(&inf, 60), Err(MetricsError::InfiniteAtom));
    }

    #[test]
    fn pe_is_bounded_by_bhattacharyya_on_these_spectra() {
        for s in [
            mismatched_root(),
            metric_root(),
            SymmetricChannel::make_bsc(&rat(1, 10)).unwrap().own_spectrum(),
        ] {
            let z = bhattacharyya(&s, 60).unwrap();
            assert!(pe(&s) <= z.hi);
        }
    }

    #[test]
    fn pe_minus_factor_examples() {
        let bsc = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        assert_eq!(pe_minus_factor(&bsc, &bsc), rat(4, 5));
        assert_eq!(
            pe_minus_factor(&mismatched_root(), &metric_root()),
            rat(7, 10)
        );
        let tie = LrSpectrum::dirac(LrValue::one());
        assert_eq!(pe_minus_factor(&tie, &tie), rat(0, 1));
    }

    #[test]
    fn pe_minus_recursion_identity() {
        let limits = EvolutionLimits::default();
        let matched = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        let report = check_pe_minus_recursion(&matched, &matched, &limits).unwrap();
        assert!(report.holds);
        assert_eq!(report.lhs, rat(0, 1));

        let report =
            check_pe_minus_recursion(&mismatched_root(), &metric_root(), &limits).unwrap();
        assert!(report.holds);
        assert_eq!(report.lhs, rat(-7, 200));
        assert_eq!(report.rhs, rat(-7, 200));
    }

    #[test]
    fn p_diff_identity_plus_example() {
        let limits = EvolutionLimits::default();
        let matched = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        let report =
            check_p_diff_identity(&matched, &matched, TransformKind::Plus, &limits).unwrap();
        assert!(report.holds);
        assert_eq!(report.lhs, rat(0, 1));

        let report = check_p_diff_identity(
            &mismatched_root(),
            &metric_root(),
            TransformKind::Plus,
            &limits,
        )
        .unwrap();
        assert!(report.holds);
        // Both sides enumerate to 7/100 for the counterexample pair.
        assert_eq!(report.lhs, rat(7, 100));
        assert_eq!(report.rhs, rat(7, 100));

        let report = check_p_diff_identity(
            &mismatched_root(),
            &metric_root(),
            TransformKind::Minus,
            &limits,
        )
        .unwrap();
        assert!(report.holds);
    }

    #[test]
    fn z_plus_squaring_examples() {
        let limits = EvolutionLimits::default();
        let tol = Rational::new(1.into(), num_bigint::BigInt::from(10u8).pow(40));
        let bsc = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        let report = check_z_plus_squaring(&bsc, 60, &tol, &limits).unwrap();
        assert!(report.holds);
        // Z+ = 0.84 exactly here.
        assert!(report.z_plus.lo <= rat(21, 25) && rat(21, 25) <= report.z_plus.hi);

        let report = check_z_plus_squaring(&mismatched_root(), 60, &tol, &limits).unwrap();
        assert!(report.holds);
        assert!(report.z_plus.lo <= rat(361, 400) && rat(361, 400) <= report.z_plus.hi);

        let tie = LrSpectrum::dirac(LrValue::one());
        let report = check_z_plus_squaring(&tie, 60, &tol, &limits).unwrap();
        assert!(report.holds);
    }

    #[test]
    fn csv_row_shape() {
        let path: crate::evolve::TransformPath = "+".parse().unwrap();
        let bsc = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        let limits = EvolutionLimits::default();
        let plus = transform(&bsc, TransformKind::Plus, &limits).unwrap();
        let row = metric_csv_row(&path, &plus, 40).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "+");
        assert_eq!(fields[1], "2");
        assert_eq!(fields[2], "2");
        assert_eq!(fields[6], "3/10");
        assert!(fields[7].starts_with("0.84000000"));
    }
}
