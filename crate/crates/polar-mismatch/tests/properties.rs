//! Property tests over seeded random channels, pairs, and spectra.

mod common;

use num_traits::{One, Signed, Zero};
use polar_mismatch::channel::ChannelPair;
use polar_mismatch::evolve::{
    quantize, synthesize, transform, EvolutionLimits, TransformKind, TransformPath,
};
use polar_mismatch::exact::{rat, Rational};
use polar_mismatch::lr::LrValue;
use polar_mismatch::metrics::{bhattacharyya, pe, pe_minus_factor, tie_split};
use polar_mismatch::robustness::{
    condition_checks, monotone_conditional_checks, MonotoneStatus, Variant,
};
use polar_mismatch::spectrum::LrSpectrum;
use proptest::prelude::*;

use common::{rand_conditioned_pair, rand_pair_same_alphabet, rand_symmetric_channel, rng};

fn limits() -> EvolutionLimits {
    EvolutionLimits::default()
}

/// Naive transform: full ordered-pair enumeration with reduced rational
/// arithmetic at every step, merged through a map. The production path
/// enumerates unreduced projective pairs and merges by sorting; the two
/// must agree exactly.
fn naive_transform(s: &LrSpectrum, kind: TransformKind) -> LrSpectrum {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<LrValue, Rational> = BTreeMap::new();
    for (a, ma) in s.points() {
        for (b, mb) in s.points() {
            let value = match kind {
                TransformKind::Minus => a.minus_combine(b),
                TransformKind::Plus => a.checked_mul(b).expect("no indeterminate products here"),
            };
            *acc.entry(value).or_insert_with(Rational::zero) += ma * mb;
        }
    }
    LrSpectrum::from_unmerged(acc).unwrap()
}

#[test]
fn own_spectra_are_reciprocal_balanced() {
    for k in 0..200u64 {
        let mut r = rng(100 + k);
        let pairs = 1 + (k % 3) as usize;
        let ch = rand_symmetric_channel(&mut r, pairs, k % 2 == 0, k % 5 == 0);
        assert!(ch.alphabet_len() <= 8);
        assert!(ch.own_spectrum().is_reciprocal_balanced());
    }
}

#[test]
fn matched_pair_law_equals_own_law() {
    for k in 0..100u64 {
        let mut r = rng(300 + k);
        let ch = rand_symmetric_channel(&mut r, 1 + (k % 2) as usize, k % 2 == 1, false);
        let pair = ChannelPair::matched(ch.clone());
        assert_eq!(pair.mismatched_spectrum().unwrap(), ch.own_spectrum());
    }
}

#[test]
fn transforms_match_the_naive_enumeration() {
    for k in 0..150u64 {
        let mut r = rng(500 + k);
        let pair = rand_pair_same_alphabet(&mut r, 1 + (k % 2) as usize, k % 3 == 0);
        for spectrum in [pair.mismatched_spectrum().unwrap(), pair.metric_spectrum()] {
            for kind in [TransformKind::Minus, TransformKind::Plus] {
                let fast = transform(&spectrum, kind, &limits()).unwrap();
                assert_eq!(fast, naive_transform(&spectrum, kind));
                assert!(fast.total_mass().is_one());
            }
        }
    }
}

#[test]
fn transforms_preserve_reciprocal_balance() {
    for k in 0..150u64 {
        let mut r = rng(700 + k);
        let ch = rand_symmetric_channel(&mut r, 1 + (k % 3) as usize, k % 2 == 0, false);
        let s = ch.own_spectrum();
        for kind in [TransformKind::Minus, TransformKind::Plus] {
            let child = transform(&s, kind, &limits()).unwrap();
            assert!(child.is_reciprocal_balanced(), "kind {kind:?} seed {k}");
        }
    }
}

#[test]
fn mismatched_pe_is_bounded_by_certified_z() {
    for k in 0..100u64 {
        let mut r = rng(900 + k);
        let pair = rand_pair_same_alphabet(&mut r, 1 + (k % 2) as usize, k % 2 == 0);
        let mut s = pair.mismatched_spectrum().unwrap();
        for step in 0..3 {
            let z = bhattacharyya(&s, 60).unwrap();
            assert!(pe(&s) <= z.hi, "pe above certified Z at seed {k} depth {step}");
            let kind = if (k + step) % 2 == 0 {
                TransformKind::Plus
            } else {
                TransformKind::Minus
            };
            s = transform(&s, kind, &limits()).unwrap();
        }
    }
}

#[test]
fn pe_decomposes_through_tie_split() {
    for k in 0..100u64 {
        let mut r = rng(1100 + k);
        let pair = rand_pair_same_alphabet(&mut r, 1 + (k % 2) as usize, k % 2 == 1);
        let s = pair.mismatched_spectrum().unwrap();
        let split = tie_split(&s);
        assert_eq!(pe(&s), &split.p_gt + rat(1, 2) * &split.p_eq);
        assert_eq!(&split.p_lt + &split.p_eq + &split.p_gt, rat(1, 1));
    }
}

#[test]
fn pe_minus_factor_nonnegative_under_strict_conditions() {
    let mut checked = 0;
    for k in 0..300u64 {
        let mut r = rng(1300 + k);
        let pair = rand_conditioned_pair(&mut r, 1 + (k % 2) as usize, k % 3 == 0);
        let s = pair.mismatched_spectrum().unwrap();
        let t = pair.metric_spectrum();
        if condition_checks(&s, &t, Variant::Strict).all_hold() {
            checked += 1;
            assert!(!pe_minus_factor(&s, &t).is_negative(), "seed {k}");
        }
    }
    assert!(checked > 100, "generator should produce strict-condition pairs");
}

#[test]
fn strict_conditions_survive_minus_chains() {
    // The minus transform preserves the strict pair (A, pe-difference)
    // exactly; walk minus chains from random conditioned roots.
    let mut checked = 0;
    for k in 0..200u64 {
        let mut r = rng(1500 + k);
        let pair = rand_conditioned_pair(&mut r, 1 + (k % 2) as usize, k % 2 == 0);
        let mut s = pair.mismatched_spectrum().unwrap();
        let mut t = pair.metric_spectrum();
        if !condition_checks(&s, &t, Variant::Strict).all_hold() {
            continue;
        }
        checked += 1;
        for depth in 0..3 {
            s = transform(&s, TransformKind::Minus, &limits()).unwrap();
            t = transform(&t, TransformKind::Minus, &limits()).unwrap();
            let report = condition_checks(&s, &t, Variant::Strict);
            assert!(
                report.all_hold(),
                "strict conditions lost after {} minus steps at seed {k}",
                depth + 1
            );
        }
    }
    assert!(checked > 80);
}

#[test]
fn plus_transform_preserves_strict_a_but_not_always_b() {
    let mut b_failures = 0;
    for k in 0..200u64 {
        let mut r = rng(1700 + k);
        let pair = rand_conditioned_pair(&mut r, 1 + (k % 2) as usize, true);
        let s = pair.mismatched_spectrum().unwrap();
        let t = pair.metric_spectrum();
        if !condition_checks(&s, &t, Variant::Strict).all_hold() {
            continue;
        }
        let s_plus = transform(&s, TransformKind::Plus, &limits()).unwrap();
        let t_plus = transform(&t, TransformKind::Plus, &limits()).unwrap();
        let report = condition_checks(&s_plus, &t_plus, Variant::Strict);
        assert!(report.cond_a.holds, "strict A lost under plus at seed {k}");
        if !report.cond_b.holds {
            b_failures += 1;
        }
    }
    // The built-in counterexample shows B can fail; random pairs may or
    // may not exhibit it, so only A is asserted per-instance.
    let _ = b_failures;
}

#[test]
fn dominance_reduces_to_the_probability_inequality() {
    // For binary indicators, E_W[F(1{L >= 1})] <= E_V[F(1{L >= 1})] for
    // every non-decreasing F exactly when the two upper-tail
    // probabilities are ordered.
    for k in 0..100u64 {
        let mut r = rng(1900 + k);
        let pair = rand_pair_same_alphabet(&mut r, 1 + (k % 2) as usize, k % 2 == 0);
        let s = pair.mismatched_spectrum().unwrap();
        let t = pair.metric_spectrum();
        let p_s = tie_split(&s).p_ge();
        let p_t = tie_split(&t).p_ge();
        let ordered = p_s <= p_t;
        for (f0, f1) in [(rat(0, 1), rat(1, 1)), (rat(1, 3), rat(1, 2)), (rat(2, 5), rat(2, 5))] {
            let e_s = &f0 * (rat(1, 1) - &p_s) + &f1 * &p_s;
            let e_t = &f0 * (rat(1, 1) - &p_t) + &f1 * &p_t;
            if ordered {
                assert!(e_s <= e_t, "monotone-F expectation ordering at seed {k}");
            }
        }
    }
}

#[test]
fn conditional_monotonicity_claims_never_report_violations() {
    for k in 0..150u64 {
        let mut r = rng(2100 + k);
        let pair = rand_pair_same_alphabet(&mut r, 1 + (k % 2) as usize, k % 3 == 0);
        let s = pair.mismatched_spectrum().unwrap();
        for report in monotone_conditional_checks(&s) {
            assert_ne!(report.status, MonotoneStatus::Violated, "seed {k}: {report:?}");
        }
    }
}

proptest! {
    #[test]
    fn path_index_round_trip(n in 0u32..10, bits in 0u64..1024) {
        let i = (bits & ((1 << n) - 1).max(0)) + 1;
        let path = TransformPath::from_index(n, i);
        prop_assert_eq!(path.index(), (1u64 << n, i));
        let rendered = path.to_string();
        let parsed: TransformPath = rendered.parse().unwrap();
        prop_assert_eq!(parsed, path);
    }

    #[test]
    fn rational_literals_round_trip(num in 0i64..10_000, den in 1i64..10_000) {
        let r = rat(num, den);
        let parsed = polar_mismatch::exact::parse_rational(&r.to_string()).unwrap();
        prop_assert_eq!(parsed, r);
    }
}

#[test]
fn quantize_bounds_support_and_preserves_tie_mass() {
    for k in 0..40u64 {
        let mut r = rng(2300 + k);
        let ch = rand_symmetric_channel(&mut r, 2, true, false);
        let mut s = ch.own_spectrum();
        // Grow a biggish support first.
        for kind in [
            TransformKind::Plus,
            TransformKind::Minus,
            TransformKind::Plus,
        ] {
            s = transform(&s, kind, &limits()).unwrap();
        }
        if s.support_len() < 12 {
            continue;
        }
        let tie = s.mass_of(&LrValue::one());
        for bins in [3usize, 9, 15] {
            let q = quantize(&s, bins);
            assert!(q.support_len() <= bins.max(3));
            assert!(q.total_mass().is_one());
            assert_eq!(q.mass_of(&LrValue::one()), tie);
        }
    }
}

#[test]
fn quantized_synthesis_flags_nothing_but_stays_normalized() {
    let lim = EvolutionLimits::quantized(1 << 20, 15);
    for k in 0..20u64 {
        let mut r = rng(2500 + k);
        let ch = rand_symmetric_channel(&mut r, 2, k % 2 == 0, false);
        let path: TransformPath = "+-+-+".parse().unwrap();
        let out = synthesize(&ch.own_spectrum(), &path, &lim).unwrap();
        assert!(out.support_len() <= 15);
        assert!(out.total_mass().is_one());
    }
}
