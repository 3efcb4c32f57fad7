//! Exact density evolution of likelihood-ratio spectra through the two
//! polar transforms.
//!
//! For a spectrum s describing the law of a metric ratio L, the first
//! transform produces the law of (L1 + L2) / (1 + L1 L2) and the second the
//! law of L1 L2, with L1 and L2 independent copies. Because the two block
//! halves enter the recursion independently and identically under any
//! product measure, evolving the root spectrum along a path yields the
//! exact law at the corresponding synthesized index.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Rational;
use crate::lr::LrValue;
use crate::spectrum::LrSpectrum;

/// One polar transform step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    Minus,
    Plus,
}

impl TransformKind {
    pub fn symbol(self) -> char {
        match self {
            TransformKind::Minus => '-',
            TransformKind::Plus => '+',
        }
    }
}

/// Sequence of transform steps identifying a synthesized channel.
///
/// The empty path is the root channel (N = 1, i = 1). Appending a minus
/// step maps (N, i) to (2N, 2i - 1) and a plus step to (2N, 2i), so a path
/// of length n spells out i - 1 in binary, most significant step first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransformPath(Vec<TransformKind>);

impl TransformPath {
    pub fn root() -> TransformPath {
        TransformPath(Vec::new())
    }

    pub fn new(steps: Vec<TransformKind>) -> TransformPath {
        TransformPath(steps)
    }

    /// Path for index `i` (1-based) at blocklength 2^n.
    pub fn from_index(n: u32, i: u64) -> TransformPath {
        assert!(i >= 1 && i <= 1u64 << n, "index {i} out of range for n={n}");
        let bits = i - 1;
        let steps = (0..n)
            .rev()
            .map(|k| {
                if (bits >> k) & 1 == 1 {
                    TransformKind::Plus
                } else {
                    TransformKind::Minus
                }
            })
            .collect();
        TransformPath(steps)
    }

    /// Blocklength and 1-based index reached by this path.
    pub fn index(&self) -> (u64, u64) {
        let mut i = 1u64;
        for step in &self.0 {
            i = match step {
                TransformKind::Minus => 2 * i - 1,
                TransformKind::Plus => 2 * i,
            };
        }
        (1u64 << self.0.len(), i)
    }

    pub fn steps(&self) -> &[TransformKind] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, kind: TransformKind) -> TransformPath {
        let mut steps = self.0.clone();
        steps.push(kind);
        TransformPath(steps)
    }
}

impl fmt::Display for TransformPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.0 {
            write!(f, "{}", step.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for TransformPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .chars()
            .map(|c| match c {
                '-' => Ok(TransformKind::Minus),
                '+' => Ok(TransformKind::Plus),
                other => Err(format!("invalid path step `{other}`, expected '-' or '+'")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(TransformPath)
    }
}

impl Serialize for TransformPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TransformPath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Support-growth policy for evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvolutionMode {
    /// Fail loudly when the support would exceed the cap.
    Exact,
    /// Collapse the support to at most `bins` points after each transform.
    Quantized { bins: usize },
}

/// Limits applied while evolving spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionLimits {
    pub max_support: usize,
    pub mode: EvolutionMode,
}

impl EvolutionLimits {
    pub fn exact(max_support: usize) -> EvolutionLimits {
        EvolutionLimits {
            max_support,
            mode: EvolutionMode::Exact,
        }
    }

    pub fn quantized(max_support: usize, bins: usize) -> EvolutionLimits {
        assert!(bins >= 3, "quantization needs at least 3 bins");
        EvolutionLimits {
            max_support,
            mode: EvolutionMode::Quantized { bins },
        }
    }

    pub fn mode_label(&self) -> String {
        match self.mode {
            EvolutionMode::Exact => "exact".to_string(),
            EvolutionMode::Quantized { bins } => format!("quantized({bins})"),
        }
    }
}

impl Default for EvolutionLimits {
    fn default() -> Self {
        EvolutionLimits::exact(1 << 20)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvolveError {
    #[error("support {support} exceeds the cap {max_support} at path `{path}`")]
    SupportOverflow {
        support: usize,
        max_support: usize,
        path: String,
    },
    #[error("spectrum carries positive mass at an infinite ratio; evolution requires it to be zero")]
    InfiniteAtom,
    #[error("indeterminate product 0 * inf with positive mass")]
    IndeterminateProduct,
}

impl EvolveError {
    fn at_path(self, path: &TransformPath) -> EvolveError {
        match self {
            EvolveError::SupportOverflow {
                support,
                max_support,
                ..
            } => EvolveError::SupportOverflow {
                support,
                max_support,
                path: path.to_string(),
            },
            other => other,
        }
    }
}

/// Transform working representation: unreduced projective ratios with
/// big-integer weights over an implicit common denominator. Reduction to
/// canonical form happens once per distinct output value, not once per
/// enumerated pair.
mod projective {
    use num_bigint::BigUint;
    use num_traits::Zero;

    use crate::lr::LrValue;

    /// Non-negative ratio `num/den`, not necessarily reduced; (0, d) is
    /// zero, (n, 0) is infinity, (0, 0) is indeterminate.
    #[derive(Debug, Clone)]
    pub struct Ratio {
        pub num: BigUint,
        pub den: BigUint,
    }

    impl Ratio {
        pub fn of(lr: &LrValue) -> Ratio {
            match lr {
                LrValue::Zero => Ratio {
                    num: BigUint::zero(),
                    den: BigUint::from(1u32),
                },
                LrValue::Infinity => Ratio {
                    num: BigUint::from(1u32),
                    den: BigUint::zero(),
                },
                LrValue::Finite(r) => Ratio {
                    num: r.numer().magnitude().clone(),
                    den: r.denom().magnitude().clone(),
                },
            }
        }

        pub fn is_indeterminate(&self) -> bool {
            self.num.is_zero() && self.den.is_zero()
        }

        /// (a + b) / (1 + a b) on projective pairs; total on all
        /// well-defined inputs, including zero and infinity.
        pub fn minus(a: &Ratio, b: &Ratio) -> Ratio {
            Ratio {
                num: &a.num * &b.den + &b.num * &a.den,
                den: &a.den * &b.den + &a.num * &b.num,
            }
        }

        /// a * b on projective pairs; (0, 0) signals 0 * inf.
        pub fn product(a: &Ratio, b: &Ratio) -> Ratio {
            Ratio {
                num: &a.num * &b.num,
                den: &a.den * &b.den,
            }
        }

        pub fn cmp(&self, other: &Ratio) -> std::cmp::Ordering {
            (&self.num * &other.den).cmp(&(&other.num * &self.den))
        }

        /// Coarse monotone key: the bit-length difference locates the
        /// value within a factor-of-two band, so keys differing by two or
        /// more decide the comparison without any multiplication.
        pub fn magnitude_key(&self) -> i64 {
            if self.num.is_zero() {
                return i64::MIN + 1;
            }
            if self.den.is_zero() {
                return i64::MAX - 1;
            }
            self.num.bits() as i64 - self.den.bits() as i64
        }

        /// Lossy quotient for sort acceleration. Decisions based on it are
        /// taken only with a relative margin far above its rounding error;
        /// anything closer falls back to the exact comparison.
        pub fn approx(&self) -> f64 {
            use num_traits::ToPrimitive;
            let n = self.num.to_f64().unwrap_or(f64::INFINITY);
            let d = self.den.to_f64().unwrap_or(f64::INFINITY);
            n / d
        }

        pub fn to_lr(&self) -> LrValue {
            use num_bigint::{BigInt, Sign};
            if self.den.is_zero() {
                LrValue::Infinity
            } else if self.num.is_zero() {
                LrValue::Zero
            } else {
                LrValue::from_rational(crate::exact::Rational::new(
                    BigInt::from_biguint(Sign::Plus, self.num.clone()),
                    BigInt::from_biguint(Sign::Plus, self.den.clone()),
                ))
            }
        }
    }
}

use num_bigint::{BigInt, BigUint, Sign};

/// Parent masses rescaled to big-integer numerators over one shared
/// denominator, so weight accumulation needs no rational reduction.
fn scaled_masses(s: &LrSpectrum) -> (Vec<BigUint>, BigUint) {
    let mut denom = BigUint::from(1u32);
    for (_, m) in s.points() {
        denom = num_integer::lcm(denom, m.denom().magnitude().clone());
    }
    let numerators = s
        .points()
        .iter()
        .map(|(_, m)| m.numer().magnitude() * (&denom / m.denom().magnitude()))
        .collect();
    (numerators, denom)
}

/// Sorts the raw projective (value, weight) pairs, merges equal values
/// exactly, reduces once per distinct value, and applies the support
/// policy. `denom_sq` is the common denominator of all weights.
fn merge_enumeration(
    raw: Vec<(projective::Ratio, BigUint)>,
    denom_sq: BigUint,
    limits: &EvolutionLimits,
) -> Result<LrSpectrum, EvolveError> {
    struct Entry {
        band: i64,
        approx: f64,
        value: projective::Ratio,
        weight: BigUint,
    }
    let mut keyed: Vec<Entry> = raw
        .into_iter()
        .map(|(value, weight)| Entry {
            band: value.magnitude_key(),
            approx: value.approx(),
            value,
            weight,
        })
        .collect();
    keyed.sort_unstable_by(|a, b| {
        if a.band + 1 < b.band {
            return std::cmp::Ordering::Less;
        }
        if b.band + 1 < a.band {
            return std::cmp::Ordering::Greater;
        }
        // Floats decide only with a margin six orders above their error.
        let gap = (a.approx - b.approx).abs();
        if gap.is_finite() && gap > 1e-9 * a.approx.abs().max(b.approx.abs()) {
            return a.approx.partial_cmp(&b.approx).unwrap();
        }
        a.value.cmp(&b.value)
    });
    let mut merged: Vec<(i64, f64, projective::Ratio, BigUint)> =
        Vec::with_capacity(keyed.len());
    for entry in keyed {
        let matches_last = match merged.last() {
            Some((band, approx, value, _)) => {
                *band == entry.band
                    && !((entry.approx - approx).abs()
                        > 1e-9 * approx.abs().max(entry.approx.abs()))
                    && value.cmp(&entry.value).is_eq()
            }
            None => false,
        };
        if matches_last {
            let last = merged.last_mut().unwrap();
            last.3 += entry.weight;
        } else {
            merged.push((entry.band, entry.approx, entry.value, entry.weight));
        }
    }
    let merged: Vec<(projective::Ratio, BigUint)> = merged
        .into_iter()
        .map(|(_, _, value, weight)| (value, weight))
        .collect();
    if merged.len() > limits.max_support {
        return Err(EvolveError::SupportOverflow {
            support: merged.len(),
            max_support: limits.max_support,
            path: String::new(),
        });
    }
    let denom = BigInt::from_biguint(Sign::Plus, denom_sq);
    let points = merged
        .into_iter()
        .map(|(value, weight)| {
            let mass = Rational::new(BigInt::from_biguint(Sign::Plus, weight), denom.clone());
            (value.to_lr(), mass)
        })
        .collect();
    let spectrum = LrSpectrum::from_sorted_unchecked(points);
    match limits.mode {
        EvolutionMode::Exact => Ok(spectrum),
        EvolutionMode::Quantized { bins } => Ok(quantize(&spectrum, bins)),
    }
}

fn transform_impl(
    s: &LrSpectrum,
    kind: TransformKind,
    limits: &EvolutionLimits,
) -> Result<LrSpectrum, EvolveError> {
    use projective::Ratio;
    let points = s.points();
    let values: Vec<Ratio> = points.iter().map(|(v, _)| Ratio::of(v)).collect();
    let (weights, denom) = scaled_masses(s);
    let mut raw = Vec::with_capacity(points.len() * (points.len() + 1) / 2);
    for i in 0..values.len() {
        for j in i..values.len() {
            let value = match kind {
                TransformKind::Minus => Ratio::minus(&values[i], &values[j]),
                TransformKind::Plus => Ratio::product(&values[i], &values[j]),
            };
            if value.is_indeterminate() {
                return Err(EvolveError::IndeterminateProduct);
            }
            let mut weight = &weights[i] * &weights[j];
            if i != j {
                weight *= 2u32;
            }
            raw.push((value, weight));
        }
    }
    merge_enumeration(raw, &denom * &denom, limits)
}

/// Law of (L1 + L2) / (1 + L1 L2) for independent L1, L2 distributed as `s`.
pub fn transform_minus(
    s: &LrSpectrum,
    limits: &EvolutionLimits,
) -> Result<LrSpectrum, EvolveError> {
    if s.has_infinite_atom() {
        return Err(EvolveError::InfiniteAtom);
    }
    transform_impl(s, TransformKind::Minus, limits)
}

/// Law of L1 * L2 for independent L1, L2 distributed as `s`.
pub fn transform_plus(
    s: &LrSpectrum,
    limits: &EvolutionLimits,
) -> Result<LrSpectrum, EvolveError> {
    transform_impl(s, TransformKind::Plus, limits)
}

pub fn transform(
    s: &LrSpectrum,
    kind: TransformKind,
    limits: &EvolutionLimits,
) -> Result<LrSpectrum, EvolveError> {
    match kind {
        TransformKind::Minus => transform_minus(s, limits),
        TransformKind::Plus => transform_plus(s, limits),
    }
}

/// Folds the transforms along `path`, starting from the root spectrum.
pub fn synthesize(
    s: &LrSpectrum,
    path: &TransformPath,
    limits: &EvolutionLimits,
) -> Result<LrSpectrum, EvolveError> {
    let mut current = s.clone();
    let mut walked = TransformPath::root();
    for &step in path.steps() {
        walked = walked.child(step);
        current = transform(&current, step, limits).map_err(|e| e.at_path(&walked))?;
    }
    Ok(current)
}

/// Mass-preserving reduction of the support to at most `bins` points.
///
/// The exact tie point L = 1 is never merged with its neighbors, so tie
/// mass survives quantization unchanged. Bin boundaries are chosen on the
/// above-1 side and mirrored through reciprocals to the below-1 side, and
/// each merged bin is represented by its mass-weighted geometric mean
/// (reciprocal of the mirror bin's representative on the mirrored side),
/// rounded to an exact rational.
pub fn quantize(s: &LrSpectrum, bins: usize) -> LrSpectrum {
    assert!(bins >= 3, "quantization needs at least 3 bins");
    if s.support_len() <= bins {
        return s.clone();
    }
    let mut below: Vec<(LrValue, Rational)> = Vec::new();
    let mut tie: Option<Rational> = None;
    let mut above: Vec<(LrValue, Rational)> = Vec::new();
    for (v, m) in s.points() {
        match v.cmp_one() {
            std::cmp::Ordering::Less => below.push((v.clone(), m.clone())),
            std::cmp::Ordering::Equal => tie = Some(m.clone()),
            std::cmp::Ordering::Greater => above.push((v.clone(), m.clone())),
        }
    }
    let budget = bins - usize::from(tie.is_some());
    let (bins_below, bins_above) = if below.is_empty() {
        (0, budget)
    } else if above.is_empty() {
        (budget, 0)
    } else {
        let half = (budget / 2).max(1);
        (budget - half, half)
    };

    // Group boundaries on the above-1 side; reciprocal boundaries below.
    let above_groups = split_groups(&above, bins_above);
    let below_groups = if above.is_empty() {
        split_groups(&below, bins_below)
    } else {
        mirror_groups(&below, &above_groups, bins_below)
    };

    let mut out: Vec<(LrValue, Rational)> = Vec::new();
    let mut above_reps: Vec<(usize, LrValue)> = Vec::new();
    for (gi, group) in above_groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let rep = geometric_representative(group);
        above_reps.push((gi, rep.clone()));
        let mass: Rational = group.iter().map(|(_, m)| m.clone()).sum();
        out.push((rep, mass));
    }
    for (gi, group) in below_groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        // Pair with the mirror bin's representative when it exists so the
        // reciprocal structure of the support survives.
        let rep = above_reps
            .iter()
            .find(|(i, _)| *i == gi)
            .map(|(_, r)| r.recip())
            .unwrap_or_else(|| geometric_representative(group));
        let mass: Rational = group.iter().map(|(_, m)| m.clone()).sum();
        out.push((rep, mass));
    }
    if let Some(m) = tie {
        out.push((LrValue::one(), m));
    }
    LrSpectrum::from_unmerged(out).expect("quantization preserves total mass")
}

/// Splits sorted points into at most `groups` contiguous runs of near-equal
/// count.
fn split_groups(points: &[(LrValue, Rational)], groups: usize) -> Vec<Vec<(LrValue, Rational)>> {
    if points.is_empty() || groups == 0 {
        return Vec::new();
    }
    let groups = groups.min(points.len());
    let base = points.len() / groups;
    let extra = points.len() % groups;
    let mut out = Vec::with_capacity(groups);
    let mut start = 0;
    for g in 0..groups {
        let len = base + usize::from(g < extra);
        out.push(points[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Buckets the below-1 points into the reciprocal images of the above-1
/// group boundaries: a value v lands in the group whose range contains 1/v.
fn mirror_groups(
    below: &[(LrValue, Rational)],
    above_groups: &[Vec<(LrValue, Rational)>],
    max_groups: usize,
) -> Vec<Vec<(LrValue, Rational)>> {
    let mut out: Vec<Vec<(LrValue, Rational)>> = vec![Vec::new(); above_groups.len()];
    for (v, m) in below {
        let mirror = v.recip();
        let mut target = above_groups.len() - 1;
        for (gi, group) in above_groups.iter().enumerate() {
            if let Some((last, _)) = group.last() {
                if mirror <= *last {
                    target = gi;
                    break;
                }
            }
        }
        out[target].push((v.clone(), m.clone()));
    }
    // Respect the budget: merge the smallest-value groups together if the
    // mirror produced more nonempty groups than allowed.
    let nonempty = out.iter().filter(|g| !g.is_empty()).count();
    if nonempty > max_groups && max_groups > 0 {
        let mut flattened: Vec<(LrValue, Rational)> =
            out.into_iter().flatten().collect();
        flattened.sort_by(|(a, _), (b, _)| a.cmp(b));
        return split_groups(&flattened, max_groups);
    }
    out
}

/// Mass-weighted geometric mean of a group, rounded to a rational.
fn geometric_representative(group: &[(LrValue, Rational)]) -> LrValue {
    if group.len() == 1 {
        return group[0].0.clone();
    }
    let total: Rational = group.iter().map(|(_, m)| m.clone()).sum();
    let mut log_sum = 0.0f64;
    for (v, m) in group {
        let l = match v {
            LrValue::Finite(r) => ln_rational(r),
            // Zero cannot appear above 1 and a zero atom below 1 pins the
            // whole group to zero.
            LrValue::Zero => return LrValue::Zero,
            LrValue::Infinity => return LrValue::Infinity,
        };
        let weight = rational_to_f64(m) / rational_to_f64(&total);
        log_sum += weight * l;
    }
    LrValue::from_rational(rational_from_log(log_sum))
}

fn rational_to_f64(r: &Rational) -> f64 {
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // Scale both parts into f64 range before dividing.
    let shift = (nb.max(db) - 52).max(0) as u64;
    let n = (num >> shift)
        .to_string()
        .parse::<f64>()
        .unwrap_or(f64::MAX);
    let d = (den >> shift)
        .to_string()
        .parse::<f64>()
        .unwrap_or(f64::MAX);
    n / d
}

fn ln_rational(r: &Rational) -> f64 {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let ln_big = |x: &num_bigint::BigUint| -> f64 {
        let bits = x.bits();
        if bits <= 52 {
            return x.to_string().parse::<f64>().unwrap().ln();
        }
        let shift = bits - 52;
        let mantissa: f64 = (x >> shift).to_string().parse().unwrap();
        mantissa.ln() + (shift as f64) * std::f64::consts::LN_2
    };
    ln_big(num) - ln_big(den)
}

/// Rational approximation of e^x with bounded precision.
fn rational_from_log(x: f64) -> Rational {
    use num_bigint::BigInt;
    if x.abs() < 700.0 {
        let value = x.exp();
        let scale = 1u64 << 40;
        let scaled = (value * scale as f64).round();
        if scaled >= 1.0 && scaled.is_finite() {
            return Rational::new(
                BigInt::from(scaled as u128),
                BigInt::from(scale),
            );
        }
    }
    // Out of f64 range: fall back to a power of ten.
    let exp10 = (x / std::f64::consts::LN_10).round() as i64;
    let ten = BigInt::from(10);
    if exp10 >= 0 {
        Rational::from_integer(ten.pow(exp10 as u32))
    } else {
        Rational::new(BigInt::from(1), ten.pow((-exp10) as u32))
    }
}

/// Spectrum evolved at one node of the path tree.
#[derive(Debug, Clone)]
pub struct SpectrumNode {
    pub path: TransformPath,
    pub spectrum: LrSpectrum,
}

/// Breadth-ordered evolution of a root spectrum to all paths of length
/// at most `depth`. Overflowing branches are recorded and not descended.
#[derive(Debug, Clone)]
pub struct SpectrumTree {
    pub nodes: Vec<SpectrumNode>,
    pub truncated: Vec<(TransformPath, EvolveError)>,
}

impl SpectrumTree {
    pub fn get(&self, path: &TransformPath) -> Option<&LrSpectrum> {
        self.nodes
            .iter()
            .find(|n| &n.path == path)
            .map(|n| &n.spectrum)
    }
}

pub fn evolve_tree(root: &LrSpectrum, depth: u32, limits: &EvolutionLimits) -> SpectrumTree {
    fn descend(
        path: TransformPath,
        spectrum: LrSpectrum,
        depth_left: u32,
        limits: &EvolutionLimits,
    ) -> (Vec<SpectrumNode>, Vec<(TransformPath, EvolveError)>) {
        let mut nodes = Vec::new();
        let mut truncated = Vec::new();
        if depth_left == 0 {
            nodes.push(SpectrumNode { path, spectrum });
            return (nodes, truncated);
        }
        let minus_path = path.child(TransformKind::Minus);
        let plus_path = path.child(TransformKind::Plus);
        let ((minus_nodes, minus_trunc), (plus_nodes, plus_trunc)) = rayon::join(
            || match transform_minus(&spectrum, limits) {
                Ok(child) => descend(minus_path.clone(), child, depth_left - 1, limits),
                Err(e) => (Vec::new(), vec![(minus_path.clone(), e.at_path(&minus_path))]),
            },
            || match transform_plus(&spectrum, limits) {
                Ok(child) => descend(plus_path.clone(), child, depth_left - 1, limits),
                Err(e) => (Vec::new(), vec![(plus_path.clone(), e.at_path(&plus_path))]),
            },
        );
        nodes.push(SpectrumNode { path, spectrum });
        nodes.extend(minus_nodes);
        nodes.extend(plus_nodes);
        truncated.extend(minus_trunc);
        truncated.extend(plus_trunc);
        (nodes, truncated)
    }

    let (mut nodes, mut truncated) = descend(TransformPath::root(), root.clone(), depth, limits);
    nodes.sort_by_key(|n| n.path.index());
    truncated.sort_by_key(|(p, _)| p.index());
    SpectrumTree { nodes, truncated }
}

/// Evolves all leaves at exactly depth `n`, in index order, failing on the
/// first overflow.
pub fn evolve_leaves(
    root: &LrSpectrum,
    n: u32,
    limits: &EvolutionLimits,
) -> Result<Vec<SpectrumNode>, EvolveError> {
    let tree = evolve_tree(root, n, limits);
    if let Some((_, err)) = tree.truncated.first() {
        return Err(err.clone());
    }
    Ok(tree
        .nodes
        .into_par_iter()
        .filter(|node| node.path.len() == n as usize)
        .collect())
}
