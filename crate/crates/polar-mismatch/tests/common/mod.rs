//! Shared test infrastructure: seeded random channel generators and
//! brute-force enumeration oracles.
//!
//! The oracles are deliberately independent of the library's spectrum
//! convolution and decoder recursion: spectra are accumulated by walking
//! every output tuple of the product channel, and stage ratios come from
//! summing the splitting definition over all input completions with a
//! standalone iterative encoder.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Zero};
use polar_mismatch::channel::{ChannelAtom, ChannelPair, SymmetricChannel};
use polar_mismatch::evolve::{TransformKind, TransformPath};
use polar_mismatch::exact::{rat, Rational};
use polar_mismatch::lr::LrValue;
use polar_mismatch::spectrum::LrSpectrum;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric channel: `pairs` reciprocal ratio classes, an optional
/// fixed (tie) symbol, and optionally a second symbol pair per ratio class
/// so the alphabet grows without growing the distinct-ratio support. All
/// probabilities are strictly positive.
pub fn rand_symmetric_channel(
    rng: &mut ChaCha8Rng,
    pairs: usize,
    tie: bool,
    duplicate_classes: bool,
) -> SymmetricChannel {
    let mut atoms: Vec<(String, i64, i64)> = Vec::new(); // (symbol, w0, w1)
    let mut involution: Vec<(String, String)> = Vec::new();
    let mut next_id = 0..;
    let mut fresh = |prefix: &str, ids: &mut std::ops::RangeFrom<u32>| {
        format!("{prefix}{}", ids.next().unwrap())
    };
    for _ in 0..pairs {
        let a = rng.gen_range(1..50i64);
        let b = rng.gen_range(1..50i64);
        // Emitting (a*t, b*t) keeps the ratio of the class; each copy is
        // its own reciprocal symbol pair.
        let copies = if duplicate_classes && rng.gen::<bool>() { 2 } else { 1 };
        for _ in 0..copies {
            let t = rng.gen_range(1..4i64);
            let (sa, sb) = (fresh("y", &mut next_id), fresh("y", &mut next_id));
            atoms.push((sa.clone(), a * t, b * t));
            atoms.push((sb.clone(), b * t, a * t));
            involution.push((sa, sb));
        }
    }
    if tie {
        let c = rng.gen_range(1..50i64);
        atoms.push((fresh("t", &mut next_id), c, c));
    }
    let total: i64 = atoms.iter().map(|(_, w, _)| w).sum();
    let channel_atoms: Vec<ChannelAtom> = atoms
        .iter()
        .map(|(s, w0, w1)| ChannelAtom {
            symbol: s.clone(),
            p0: rat(*w0, total),
            p1: rat(*w1, total),
        })
        .collect();
    SymmetricChannel::make_symmetric(channel_atoms, &involution)
        .expect("generated channel is symmetric by construction")
}

/// Random pair on a shared alphabet with no ordering between the laws:
/// the true channel redistributes the metric channel's input-0 masses
/// arbitrarily.
pub fn rand_pair_same_alphabet(rng: &mut ChaCha8Rng, pairs: usize, tie: bool) -> ChannelPair {
    let duplicates = rng.gen::<bool>();
    let v = rand_symmetric_channel(rng, pairs, tie, duplicates);
    let w = reweighted(rng, &v, false);
    ChannelPair::pair(w, v).expect("same alphabet and involution")
}

/// Random pair satisfying the tie-inclusive root conditions: the true
/// channel only moves input-0 mass from metric-unfavored symbols
/// (ratio >= 1) toward favored ones (ratio < 1).
pub fn rand_conditioned_pair(rng: &mut ChaCha8Rng, pairs: usize, tie: bool) -> ChannelPair {
    let duplicates = rng.gen::<bool>();
    let v = rand_symmetric_channel(rng, pairs, tie, duplicates);
    let w = reweighted(rng, &v, true);
    ChannelPair::pair(w, v).expect("same alphabet and involution")
}

/// Builds a symmetric channel on `v`'s alphabet with redistributed
/// input-0 masses. When `favoring` is set, mass moves only from symbols
/// with metric ratio >= 1 to symbols with ratio < 1, which preserves the
/// root conditions exactly.
fn reweighted(rng: &mut ChaCha8Rng, v: &SymmetricChannel, favoring: bool) -> SymmetricChannel {
    let m = v.alphabet_len();
    let mut p0: Vec<Rational> = (0..m).map(|y| v.p0(y).clone()).collect();
    let below: Vec<usize> = (0..m)
        .filter(|&y| v.lr(y).map_or(false, |l| l.cmp_one() == Ordering::Less))
        .collect();
    let at_or_above: Vec<usize> = (0..m)
        .filter(|&y| v.lr(y).map_or(false, |l| l.cmp_one() != Ordering::Less))
        .collect();
    if !below.is_empty() {
        for &y in &at_or_above {
            let f = rat(rng.gen_range(0..=10), 10);
            let moved = &p0[y] * &f;
            p0[y] -= &moved;
            let target = below[rng.gen_range(0..below.len())];
            p0[target] += moved;
        }
    }
    if !favoring {
        // Shuffle some mass in the other direction as well.
        for &y in &below {
            if at_or_above.is_empty() {
                break;
            }
            let f = rat(rng.gen_range(0..=10), 20);
            let moved = &p0[y] * &f;
            p0[y] -= &moved;
            let target = at_or_above[rng.gen_range(0..at_or_above.len())];
            p0[target] += moved;
        }
    }
    let atoms: Vec<ChannelAtom> = (0..m)
        .map(|y| ChannelAtom {
            symbol: v.symbols()[y].clone(),
            p0: p0[y].clone(),
            p1: p0[v.mirror(y)].clone(),
        })
        .collect();
    let involution: Vec<(String, String)> = (0..m)
        .filter(|&y| v.mirror(y) > y)
        .map(|y| (v.symbols()[y].clone(), v.symbols()[v.mirror(y)].clone()))
        .collect();
    SymmetricChannel::make_symmetric(atoms, &involution)
        .expect("reweighted channel keeps the symmetry")
}

/// Oracle spectrum: the law of the path's metric ratio under `measure`'s
/// input-0 product measure, accumulated by direct enumeration of all
/// output tuples. Independent of the library's convolution.
pub fn oracle_spectrum(
    metric: &SymmetricChannel,
    measure: &SymmetricChannel,
    path: &TransformPath,
) -> LrSpectrum {
    let depth = path.len();
    let n = 1usize << depth;
    let alphabet = metric.alphabet_len();
    assert!(
        (alphabet as f64).powi(n as i32) < 2e7,
        "oracle enumeration too large"
    );
    let mut acc: BTreeMap<LrValue, Rational> = BTreeMap::new();
    let mut tuple = vec![0usize; n];
    loop {
        let mut mass = Rational::one();
        for &y in &tuple {
            mass *= measure.p0(y);
        }
        if !mass.is_zero() {
            let lr = oracle_lr(metric, &tuple, path.steps());
            *acc.entry(lr).or_insert_with(Rational::zero) += mass;
        }
        // Next tuple in lexicographic order.
        let mut k = 0;
        loop {
            if k == n {
                let points: Vec<(LrValue, Rational)> = acc.into_iter().collect();
                return LrSpectrum::from_unmerged(points).expect("oracle masses sum to one");
            }
            tuple[k] += 1;
            if tuple[k] < alphabet {
                break;
            }
            tuple[k] = 0;
            k += 1;
        }
    }
}

/// Metric ratio of one output tuple: the halves combine by the last path
/// step, recursing on the prefix.
fn oracle_lr(metric: &SymmetricChannel, tuple: &[usize], steps: &[TransformKind]) -> LrValue {
    match steps.split_last() {
        None => metric.lr(tuple[0]).expect("metric ratio defined"),
        Some((last, prefix)) => {
            let half = tuple.len() / 2;
            let l1 = oracle_lr(metric, &tuple[..half], prefix);
            let l2 = oracle_lr(metric, &tuple[half..], prefix);
            match last {
                TransformKind::Minus => l1.minus_combine(&l2),
                TransformKind::Plus => l1
                    .checked_mul(&l2)
                    .expect("oracle tuples have determinate products"),
            }
        }
    }
}

/// Standalone iterative encoder for the oracle: XOR the first half of each
/// block with the second, halving the block size each stage.
pub fn oracle_encode(u: &[u8]) -> Vec<u8> {
    let mut x = u.to_vec();
    let n = x.len();
    let mut step = n / 2;
    while step >= 1 {
        let mut start = 0;
        while start < n {
            for j in start..start + step {
                x[j] ^= x[j + step];
            }
            start += 2 * step;
        }
        step /= 2;
    }
    x
}

/// Per-stage decision statistic computed from the splitting definition:
/// ratio of the summed conditional likelihoods over all completions of the
/// later inputs, with earlier estimates fixed.
pub fn oracle_stage_lr(
    y: &[usize],
    metric: &SymmetricChannel,
    past: &[u8],
    stage: usize,
) -> Option<LrValue> {
    let n = y.len();
    let rest = n - stage - 1;
    let mut sums = [Rational::zero(), Rational::zero()];
    for (b, sum) in sums.iter_mut().enumerate() {
        for completion in 0..(1u64 << rest) {
            let mut u = Vec::with_capacity(n);
            u.extend_from_slice(past);
            u.push(b as u8);
            for k in 0..rest {
                u.push(((completion >> k) & 1) as u8);
            }
            let x = oracle_encode(&u);
            let mut likelihood = Rational::one();
            for (sym, bit) in y.iter().zip(&x) {
                likelihood *= if *bit == 0 {
                    metric.p0(*sym)
                } else {
                    metric.p1(*sym)
                };
                if likelihood.is_zero() {
                    break;
                }
            }
            *sum += likelihood;
        }
    }
    LrValue::from_ratio(&sums[1], &sums[0])
}

/// Full oracle decode: per-stage enumeration with the same tie policy as
/// the production decoder (fair coin from `rng`).
pub struct OracleDecode {
    pub u_hat: Vec<u8>,
    pub stage_lrs: Vec<LrValue>,
    pub ties: u64,
}

pub fn oracle_decode(
    y: &[usize],
    frozen: &[Option<u8>],
    metric: &SymmetricChannel,
    rng: &mut ChaCha8Rng,
) -> OracleDecode {
    let n = y.len();
    let mut u_hat: Vec<u8> = Vec::with_capacity(n);
    let mut stage_lrs = Vec::with_capacity(n);
    let mut ties = 0;
    for stage in 0..n {
        let lr = oracle_stage_lr(y, metric, &u_hat, stage)
            .expect("strictly positive metrics keep the ratio determinate");
        let bit = match frozen[stage] {
            Some(b) => b,
            None => match lr.cmp_one() {
                Ordering::Less => 0,
                Ordering::Greater => 1,
                Ordering::Equal => {
                    ties += 1;
                    u8::from(rng.gen::<bool>())
                }
            },
        };
        stage_lrs.push(lr);
        u_hat.push(bit);
    }
    OracleDecode {
        u_hat,
        stage_lrs,
        ties,
    }
}
