//! Robustness conditions for mismatched decoding, their preservation under
//! the polar transforms, the tie-mass process, and the built-in
//! plus-transform counterexample.
//!
//! Two condition variants are kept distinct. The weak variant compares
//! tie-inclusive events and carries three conditions:
//!   A) P_V[L <= 1] >= P_V[L >= 1]
//!   B) P_W[L >= 1] <= P_V[L >= 1]
//!   C) P_W[L <= 1] >= P_V[L <= 1]
//! All three are preserved by both transforms. The strict variant compares
//! tie-exclusive events and replaces B with a decision-error difference:
//!   A) P_V[L < 1] >= P_V[L > 1]
//!   B) pe(W, V) - pe(V) <= 0
//! The minus transform preserves the strict pair; the plus transform does
//! not, and `counterexample_pair` reproduces the failing instance.
//!
//! Throughout, the distribution of the binary indicator 1{L >= 1} under one
//! measure is stochastically dominated by its law under another exactly
//! when the corresponding probabilities are ordered, so dominance is
//! checked at the probability level and never through a generic dominance
//! test.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelAtom, ChannelError, ChannelPair, SymmetricChannel};
use crate::construct;
use crate::evolve::{
    evolve_tree, EvolutionLimits, EvolveError, SpectrumTree, TransformKind, TransformPath,
};
use crate::exact::{rat, Enclosure, Rational};
use crate::lr::LrValue;
use crate::metrics::{bhattacharyya, pe, tie_split, MetricsError, TieSplit, DEFAULT_Z_DIGITS};
use crate::spectrum::LrSpectrum;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RobustnessError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Construct(#[from] construct::ConstructError),
}

/// Which reading of the robustness conditions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// Tie-inclusive comparisons; conditions A, B, C.
    Weak,
    /// Tie-exclusive comparison for A; B is the pe difference. No C.
    Strict,
}

/// Outcome of a single condition with its exact margin; the condition
/// holds exactly when the margin is non-negative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    #[serde(with = "crate::exact::serde_rational")]
    pub margin: Rational,
}

impl ConditionCheck {
    fn from_margin(margin: Rational) -> ConditionCheck {
        ConditionCheck {
            holds: !margin.is_negative(),
            margin,
        }
    }
}

/// Condition evaluation at one synthesized channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub variant: Variant,
    pub cond_a: ConditionCheck,
    pub cond_b: ConditionCheck,
    pub cond_c: Option<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.cond_a.holds
            && self.cond_b.holds
            && self.cond_c.as_ref().map_or(true, |c| c.holds)
    }
}

/// Evaluates the conditions from the two laws of the metric ratio:
/// `s` under the true channel, `t` under the metric channel itself.
pub fn condition_checks(s: &LrSpectrum, t: &LrSpectrum, variant: Variant) -> ConditionReport {
    condition_checks_from_splits(&tie_split(s), &tie_split(t), variant)
}

/// Same evaluation from precomputed mass partitions.
pub fn condition_checks_from_splits(
    split_s: &TieSplit,
    split_t: &TieSplit,
    variant: Variant,
) -> ConditionReport {
    // Tie-inclusive and tie-exclusive forms of A coincide: both margins
    // reduce to P_V[L < 1] - P_V[L > 1].
    let cond_a = ConditionCheck::from_margin(&split_t.p_lt - &split_t.p_gt);
    match variant {
        Variant::Weak => ConditionReport {
            variant,
            cond_a,
            cond_b: ConditionCheck::from_margin(split_t.p_ge() - split_s.p_ge()),
            cond_c: Some(ConditionCheck::from_margin(split_s.p_le() - split_t.p_le())),
        },
        Variant::Strict => ConditionReport {
            variant,
            cond_a,
            cond_b: ConditionCheck::from_margin(split_pe(split_t) - split_pe(split_s)),
            cond_c: None,
        },
    }
}

fn split_pe(split: &TieSplit) -> Rational {
    &split.p_gt + rat(1, 2) * &split.p_eq
}

/// Spectra of both laws at every node of the transform tree, to `depth`.
#[derive(Debug, Clone)]
pub struct PairTree {
    pub nodes: Vec<PairNode>,
    pub truncated: Vec<(TransformPath, EvolveError)>,
}

#[derive(Debug, Clone)]
pub struct PairNode {
    pub path: TransformPath,
    /// Law of the metric ratio under the true channel.
    pub w_law: LrSpectrum,
    /// Law of the metric ratio under the metric channel.
    pub v_law: LrSpectrum,
}

impl PairTree {
    pub fn get(&self, path: &TransformPath) -> Option<&PairNode> {
        self.nodes.iter().find(|n| &n.path == path)
    }

    pub fn children(&self, path: &TransformPath) -> (Option<&PairNode>, Option<&PairNode>) {
        (
            self.get(&path.child(TransformKind::Minus)),
            self.get(&path.child(TransformKind::Plus)),
        )
    }
}

/// Evolves both laws independently along every path to `depth`. The two
/// trees truncate together: a node survives only if both laws evolved.
pub fn evolve_pair_tree(
    pair: &ChannelPair,
    depth: u32,
    limits: &EvolutionLimits,
) -> Result<PairTree, RobustnessError> {
    let w_root = pair.mismatched_spectrum()?;
    let v_root = pair.metric_spectrum();
    let (w_tree, v_tree): (SpectrumTree, SpectrumTree) = rayon::join(
        || evolve_tree(&w_root, depth, limits),
        || evolve_tree(&v_root, depth, limits),
    );
    let mut truncated: Vec<(TransformPath, EvolveError)> = Vec::new();
    for (p, e) in w_tree.truncated.iter().chain(v_tree.truncated.iter()) {
        if !truncated.iter().any(|(q, _)| q == p) {
            truncated.push((p.clone(), e.clone()));
        }
    }
    let mut nodes = Vec::new();
    for w_node in w_tree.nodes {
        if let Some(v_spec) = v_tree.get(&w_node.path) {
            // Skip nodes below a truncation on either side.
            let blocked = truncated
                .iter()
                .any(|(p, _)| w_node.path.to_string().starts_with(&p.to_string()));
            if !blocked {
                nodes.push(PairNode {
                    path: w_node.path,
                    w_law: w_node.spectrum,
                    v_law: v_spec.clone(),
                });
            }
        }
    }
    truncated.sort_by_key(|(p, _)| p.index());
    Ok(PairTree { nodes, truncated })
}

/// Conditions at a single path, computed from the root pair.
pub fn check_conditions(
    pair: &ChannelPair,
    path: &TransformPath,
    variant: Variant,
    limits: &EvolutionLimits,
) -> Result<ConditionReport, RobustnessError> {
    let s = crate::evolve::synthesize(&pair.mismatched_spectrum()?, path, limits)?;
    let t = crate::evolve::synthesize(&pair.metric_spectrum(), path, limits)?;
    Ok(condition_checks(&s, &t, variant))
}

/// Per-node outcome of a preservation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepNode {
    pub path: TransformPath,
    pub n: u64,
    pub i: u64,
    pub report: ConditionReport,
    #[serde(with = "crate::exact::serde_rational")]
    pub pe_mismatched: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub pe_metric: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub tie_mass_w: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub tie_mass_v: Rational,
    /// P_W[L >= 1] - P_V[L >= 1]; the preserved ordering is <= 0.
    #[serde(with = "crate::exact::serde_rational")]
    pub p_ge_gap: Rational,
}

/// Full sweep of the condition reports over every node to `n_max`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub variant: Variant,
    pub mode: String,
    pub nodes: Vec<SweepNode>,
    pub truncated: Vec<(String, String)>,
}

impl SweepReport {
    pub fn root(&self) -> &SweepNode {
        &self.nodes[0]
    }

    pub fn node(&self, path: &TransformPath) -> Option<&SweepNode> {
        self.nodes.iter().find(|n| &n.path == path)
    }

    /// Nodes whose conditions fail even though the parent's hold,
    /// restricted to children reached by `kind`. `tie_free_parent`
    /// additionally requires both parent laws to carry no tie mass.
    pub fn preservation_failures(
        &self,
        kind: TransformKind,
        tie_free_parent: bool,
    ) -> Vec<&SweepNode> {
        self.nodes
            .iter()
            .filter(|node| {
                let steps = node.path.steps();
                if steps.last() != Some(&kind) {
                    return false;
                }
                let parent = TransformPath::new(steps[..steps.len() - 1].to_vec());
                let Some(parent_node) = self.node(&parent) else {
                    return false;
                };
                if !parent_node.report.all_hold() || node.report.all_hold() {
                    return false;
                }
                !tie_free_parent
                    || (parent_node.tie_mass_w.is_zero() && parent_node.tie_mass_v.is_zero())
            })
            .collect()
    }

    /// Failures that contradict a provable statement and therefore expose
    /// an implementation bug: for the strict variant, any minus child that
    /// drops a condition its parent held (exact algebraic preservation);
    /// for the weak variant, any failure below a holding parent whose laws
    /// are tie-free (the dominance argument is valid there).
    pub fn theorem_violations(&self) -> Vec<&SweepNode> {
        match self.variant {
            Variant::Weak => {
                let mut out = self.preservation_failures(TransformKind::Minus, true);
                out.extend(self.preservation_failures(TransformKind::Plus, true));
                out
            }
            Variant::Strict => self.preservation_failures(TransformKind::Minus, false),
        }
    }

    /// Recorded findings that are consistent with the analysis: strict
    /// plus children losing the decision-error ordering, and weak-variant
    /// failures below tie-bearing parents (where the three-condition
    /// preservation claim genuinely fails).
    pub fn preservation_findings(&self) -> Vec<&SweepNode> {
        match self.variant {
            Variant::Weak => {
                let tie_free: Vec<*const SweepNode> = self
                    .theorem_violations()
                    .into_iter()
                    .map(|n| n as *const _)
                    .collect();
                let mut out = self.preservation_failures(TransformKind::Minus, false);
                out.extend(self.preservation_failures(TransformKind::Plus, false));
                out.retain(|n| !tie_free.contains(&(*n as *const _)));
                out
            }
            Variant::Strict => self.preservation_failures(TransformKind::Plus, false),
        }
    }

    /// Nodes where the metric law has no tie mass, so the decision-error
    /// ordering pe(W,V) <= pe(V) is implied by condition B; returns any
    /// that violate it.
    pub fn pe_ordering_violations(&self) -> Vec<&SweepNode> {
        self.nodes
            .iter()
            .filter(|node| {
                node.tie_mass_v.is_zero() && node.pe_mismatched > node.pe_metric
            })
            .collect()
    }
}

pub fn sweep_preservation(
    pair: &ChannelPair,
    n_max: u32,
    variant: Variant,
    limits: &EvolutionLimits,
) -> Result<SweepReport, RobustnessError> {
    let tree = evolve_pair_tree(pair, n_max, limits)?;
    let nodes = tree
        .nodes
        .par_iter()
        .map(|node| {
            let (n, i) = node.path.index();
            let split_w = tie_split(&node.w_law);
            let split_v = tie_split(&node.v_law);
            let report = condition_checks_from_splits(&split_w, &split_v, variant);
            SweepNode {
                path: node.path.clone(),
                n,
                i,
                p_ge_gap: split_w.p_ge() - split_v.p_ge(),
                pe_mismatched: split_pe(&split_w),
                pe_metric: split_pe(&split_v),
                tie_mass_w: split_w.p_eq,
                tie_mass_v: split_v.p_eq,
                report,
            }
        })
        .collect::<Vec<_>>();
    Ok(SweepReport {
        variant,
        mode: limits.mode_label(),
        nodes,
        truncated: tree
            .truncated
            .iter()
            .map(|(p, e)| (p.to_string(), e.to_string()))
            .collect(),
    })
}

/// The tie-mass process P_W[L = 1] along the transform tree.
///
/// For each internal node the minus child's tie mass equals 2p - p^2
/// exactly (the combined ratio is 1 exactly when either half is), and the
/// plus child's tie mass is at least p^2, so the two-child sum is at least
/// 2p: the process is a submartingale.
#[derive(Debug, Clone, Serialize)]
pub struct TieNode {
    pub path: TransformPath,
    #[serde(with = "crate::exact::serde_rational")]
    pub tie_mass: Rational,
    #[serde(with = "crate::exact::serde_rational_opt")]
    pub minus_child: Option<Rational>,
    #[serde(with = "crate::exact::serde_rational_opt")]
    pub plus_child: Option<Rational>,
    /// (minus + plus)/2 - parent, when both children exist.
    #[serde(with = "crate::exact::serde_rational_opt")]
    pub submartingale_gap: Option<Rational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TieProcessTrace {
    pub nodes: Vec<TieNode>,
    /// Paths where the exact minus identity or the plus lower bound failed;
    /// both are theorem-backed, so any entry is an implementation bug.
    pub violations: Vec<String>,
    pub truncated: Vec<(String, String)>,
}

pub fn track_tie_process(
    pair: &ChannelPair,
    n_max: u32,
    limits: &EvolutionLimits,
) -> Result<TieProcessTrace, RobustnessError> {
    let tree = evolve_pair_tree(pair, n_max, limits)?;
    let mut nodes = Vec::new();
    let mut violations = Vec::new();
    let two = rat(2, 1);
    for node in &tree.nodes {
        let p = tie_split(&node.w_law).p_eq;
        let (minus, plus) = tree.children(&node.path);
        let minus_p = minus.map(|c| tie_split(&c.w_law).p_eq);
        let plus_p = plus.map(|c| tie_split(&c.w_law).p_eq);
        let gap = match (&minus_p, &plus_p) {
            (Some(m), Some(q)) => {
                let expected_minus = &two * &p - &p * &p;
                if *m != expected_minus {
                    violations.push(format!("{}: minus tie mass", node.path));
                }
                if *q < &p * &p {
                    violations.push(format!("{}: plus tie mass", node.path));
                }
                Some((m + q) / &two - &p)
            }
            _ => None,
        };
        if let Some(g) = &gap {
            if g.is_negative() {
                violations.push(format!("{}: submartingale gap", node.path));
            }
        }
        nodes.push(TieNode {
            path: node.path.clone(),
            tie_mass: p,
            minus_child: minus_p,
            plus_child: plus_p,
            submartingale_gap: gap,
        });
    }
    Ok(TieProcessTrace {
        nodes,
        violations,
        truncated: tree
            .truncated
            .iter()
            .map(|(p, e)| (p.to_string(), e.to_string()))
            .collect(),
    })
}

/// Status of a conditional-monotonicity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MonotoneStatus {
    Verified,
    /// One of the conditioning events has probability zero.
    DegenerateConditioning,
    /// The minus-transform hypothesis P[L <= 1] >= P[L >= 1] fails, so the
    /// claim is not asserted.
    HypothesisUnmet,
    Violated,
}

/// One conditional-expectation monotonicity claim: conditioning the child
/// indicator on the parent indicator is non-decreasing.
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneReport {
    pub transform: TransformKind,
    /// Direction of both indicators: true compares against `>= 1`,
    /// false against `<= 1`.
    pub upper_tail: bool,
    #[serde(with = "crate::exact::serde_rational_opt")]
    pub expectation_given_0: Option<Rational>,
    #[serde(with = "crate::exact::serde_rational_opt")]
    pub expectation_given_1: Option<Rational>,
    pub status: MonotoneStatus,
}

/// Brute-force check of the four conditional-monotonicity claims on the
/// product of two independent copies of `s`.
pub fn monotone_conditional_checks(s: &LrSpectrum) -> Vec<MonotoneReport> {
    let split = tie_split(s);
    let hypothesis_holds = split.p_le() >= split.p_ge();
    let mut out = Vec::new();
    for kind in [TransformKind::Minus, TransformKind::Plus] {
        for upper_tail in [true, false] {
            out.push(monotone_one(s, kind, upper_tail, hypothesis_holds));
        }
    }
    out
}

fn indicator(v: &LrValue, upper_tail: bool) -> bool {
    match v.cmp_one() {
        Ordering::Equal => true,
        Ordering::Greater => upper_tail,
        Ordering::Less => !upper_tail,
    }
}

fn monotone_one(
    s: &LrSpectrum,
    kind: TransformKind,
    upper_tail: bool,
    hypothesis_holds: bool,
) -> MonotoneReport {
    if kind == TransformKind::Minus && !hypothesis_holds {
        return MonotoneReport {
            transform: kind,
            upper_tail,
            expectation_given_0: None,
            expectation_given_1: None,
            status: MonotoneStatus::HypothesisUnmet,
        };
    }
    // E[ 1{child in tail} | 1{L1 in tail} = b ] over the product measure.
    let mut mass = [Rational::zero(), Rational::zero()];
    let mut hit = [Rational::zero(), Rational::zero()];
    for (l1, m1) in s.points() {
        let b = usize::from(indicator(l1, upper_tail));
        for (l2, m2) in s.points() {
            let child = match kind {
                TransformKind::Minus => l1.minus_combine(l2),
                TransformKind::Plus => l1
                    .checked_mul(l2)
                    .expect("spectra entering monotonicity checks carry no indeterminate products"),
            };
            let w = m1 * m2;
            mass[b] += &w;
            if indicator(&child, upper_tail) {
                hit[b] += &w;
            }
        }
    }
    if mass[0].is_zero() || mass[1].is_zero() {
        return MonotoneReport {
            transform: kind,
            upper_tail,
            expectation_given_0: (!mass[0].is_zero()).then(|| &hit[0] / &mass[0]),
            expectation_given_1: (!mass[1].is_zero()).then(|| &hit[1] / &mass[1]),
            status: MonotoneStatus::DegenerateConditioning,
        };
    }
    let e0 = &hit[0] / &mass[0];
    let e1 = &hit[1] / &mass[1];
    let status = if e1 >= e0 {
        MonotoneStatus::Verified
    } else {
        MonotoneStatus::Violated
    };
    MonotoneReport {
        transform: kind,
        upper_tail,
        expectation_given_0: Some(e0),
        expectation_given_1: Some(e1),
        status,
    }
}

/// Conditional-monotonicity checks on the true-channel law at `path`.
pub fn check_monotone_conditional(
    pair: &ChannelPair,
    path: &TransformPath,
    limits: &EvolutionLimits,
) -> Result<Vec<MonotoneReport>, RobustnessError> {
    let s = crate::evolve::synthesize(&pair.mismatched_spectrum()?, path, limits)?;
    Ok(monotone_conditional_checks(&s))
}

/// Sign of a certified-real difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignVerdict {
    Negative,
    Zero,
    Positive,
    /// Closer than the certified precision; reported, never guessed.
    Indeterminate,
}

/// Alignment of the decision-error and Bhattacharyya difference signs at
/// one node.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentRecord {
    pub path: TransformPath,
    pub n: u64,
    pub i: u64,
    #[serde(with = "crate::exact::serde_rational")]
    pub pe_diff: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub z_diff_lo: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub z_diff_hi: Rational,
    pub z_sign: SignVerdict,
    pub verdict: AlignmentVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlignmentVerdict {
    Aligned,
    /// Either difference is exactly zero, so the strict equivalence is
    /// vacuous at this node.
    Boundary,
    /// The two differences carry opposite signs. An empirical finding
    /// about the pair, not an implementation failure: the alignment
    /// property is a hypothesis, and pairs that break plus-preservation
    /// must break it somewhere.
    Misaligned,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub records: Vec<AlignmentRecord>,
    pub truncated: Vec<(String, String)>,
}

impl AlignmentReport {
    pub fn misalignments(&self) -> Vec<&AlignmentRecord> {
        self.records
            .iter()
            .filter(|r| r.verdict == AlignmentVerdict::Misaligned)
            .collect()
    }
}

/// Empirical, depth-bounded record of whether the decision-error and
/// Bhattacharyya differences keep the same sign at every node.
pub fn check_pe_z_alignment(
    pair: &ChannelPair,
    n_max: u32,
    limits: &EvolutionLimits,
    digits: usize,
) -> Result<AlignmentReport, RobustnessError> {
    let tree = evolve_pair_tree(pair, n_max, limits)?;
    let records = tree
        .nodes
        .par_iter()
        .map(|node| -> Result<AlignmentRecord, RobustnessError> {
            let pe_diff = pe(&node.w_law) - pe(&node.v_law);
            let (n, i) = node.path.index();
            let (z_diff, z_sign) = z_difference_sign(&node.w_law, &node.v_law, digits)?;
            let verdict = if pe_diff.is_zero() || z_sign == SignVerdict::Zero {
                AlignmentVerdict::Boundary
            } else {
                match z_sign {
                    SignVerdict::Indeterminate => AlignmentVerdict::Indeterminate,
                    SignVerdict::Negative => {
                        if pe_diff.is_negative() {
                            AlignmentVerdict::Aligned
                        } else {
                            AlignmentVerdict::Misaligned
                        }
                    }
                    SignVerdict::Positive => {
                        if pe_diff.is_positive() {
                            AlignmentVerdict::Aligned
                        } else {
                            AlignmentVerdict::Misaligned
                        }
                    }
                    SignVerdict::Zero => unreachable!(),
                }
            };
            Ok(AlignmentRecord {
                path: node.path.clone(),
                n,
                i,
                pe_diff,
                z_diff_lo: z_diff.lo,
                z_diff_hi: z_diff.hi,
                z_sign,
                verdict,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AlignmentReport {
        records,
        truncated: tree
            .truncated
            .iter()
            .map(|(p, e)| (p.to_string(), e.to_string()))
            .collect(),
    })
}

fn z_difference_sign(
    s: &LrSpectrum,
    t: &LrSpectrum,
    digits: usize,
) -> Result<(Enclosure, SignVerdict), MetricsError> {
    if s == t {
        return Ok((Enclosure::zero(), SignVerdict::Zero));
    }
    let mut precision = digits;
    // One escalation before declaring the sign indeterminate.
    for attempt in 0..2 {
        let zs = bhattacharyya(s, precision)?;
        let zt = bhattacharyya(t, precision)?;
        let diff = zs.sub(&zt);
        match diff.definite_sign() {
            Some(Ordering::Less) => return Ok((diff, SignVerdict::Negative)),
            Some(Ordering::Greater) => return Ok((diff, SignVerdict::Positive)),
            Some(Ordering::Equal) => return Ok((diff, SignVerdict::Zero)),
            None if attempt == 0 => precision *= 4,
            None => return Ok((diff, SignVerdict::Indeterminate)),
        }
    }
    unreachable!()
}

/// Information sets built from two design channels, and whether the first
/// is contained in the second.
#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub design_set: Vec<u64>,
    pub true_set: Vec<u64>,
    pub included: bool,
    pub design_only: Vec<u64>,
}

/// Builds matched information sets for both channels (ascending
/// Bhattacharyya order) and reports whether the design set is contained in
/// the true channel's set. Informational: no inclusion theorem is asserted
/// here.
pub fn check_info_set_inclusion(
    v_design: &SymmetricChannel,
    w_true: &SymmetricChannel,
    n: u32,
    size: usize,
    limits: &EvolutionLimits,
) -> Result<InclusionReport, RobustnessError> {
    let design = construct::build_info_set(v_design, n, size, limits, DEFAULT_Z_DIGITS)?;
    let truth = construct::build_info_set(w_true, n, size, limits, DEFAULT_Z_DIGITS)?;
    let design_set = design.info_set().to_vec();
    let true_set = truth.info_set().to_vec();
    let design_only: Vec<u64> = design_set
        .iter()
        .copied()
        .filter(|i| !true_set.contains(i))
        .collect();
    Ok(InclusionReport {
        included: design_only.is_empty(),
        design_set,
        true_set,
        design_only,
    })
}

/// The plus-transform counterexample: a crossover-0.3 binary symmetric
/// channel embedded on a ternary alphabet, decoded with the ternary metric
/// whose ratios are {1/4, 1, 4} with input-0 masses {2/5, 1/2, 1/10}.
pub fn counterexample_pair() -> ChannelPair {
    let w = SymmetricChannel::make_symmetric(
        vec![
            ChannelAtom {
                symbol: "0".into(),
                p0: rat(7, 10),
                p1: rat(3, 10),
            },
            ChannelAtom {
                symbol: "e".into(),
                p0: rat(0, 1),
                p1: rat(0, 1),
            },
            ChannelAtom {
                symbol: "1".into(),
                p0: rat(3, 10),
                p1: rat(7, 10),
            },
        ],
        &[("0".into(), "1".into())],
    )
    .expect("counterexample true channel is symmetric");
    let v = SymmetricChannel::make_symmetric(
        vec![
            ChannelAtom {
                symbol: "0".into(),
                p0: rat(2, 5),
                p1: rat(1, 10),
            },
            ChannelAtom {
                symbol: "e".into(),
                p0: rat(1, 2),
                p1: rat(1, 2),
            },
            ChannelAtom {
                symbol: "1".into(),
                p0: rat(1, 10),
                p1: rat(2, 5),
            },
        ],
        &[("0".into(), "1".into())],
    )
    .expect("counterexample metric channel is symmetric");
    ChannelPair::pair(w, v).expect("counterexample channels share alphabet and involution")
}

/// Exact numbers of the counterexample at the root and both depth-1
/// children.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub root: CounterexampleNode,
    pub minus_child: CounterexampleNode,
    pub plus_child: CounterexampleNode,
    /// The strict conditions hold at the root and survive the minus
    /// transform but fail after the plus transform.
    pub plus_violation_found: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleNode {
    pub path: String,
    #[serde(with = "crate::exact::serde_rational")]
    pub pe_mismatched: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    pub pe_metric: Rational,
    pub conditions: ConditionReport,
}

pub fn counterexample_report(limits: &EvolutionLimits) -> Result<CounterexampleReport, RobustnessError> {
    let pair = counterexample_pair();
    let sweep = sweep_preservation(&pair, 1, Variant::Strict, limits)?;
    let node = |path: &str| -> CounterexampleNode {
        let path: TransformPath = path.parse().unwrap();
        let n = sweep.node(&path).expect("depth-1 sweep has all three nodes");
        CounterexampleNode {
            path: n.path.to_string(),
            pe_mismatched: n.pe_mismatched.clone(),
            pe_metric: n.pe_metric.clone(),
            conditions: n.report.clone(),
        }
    };
    let root = node("");
    let minus_child = node("-");
    let plus_child = node("+");
    let plus_violation_found = root.conditions.all_hold()
        && minus_child.conditions.all_hold()
        && !plus_child.conditions.all_hold();
    Ok(CounterexampleReport {
        root,
        minus_child,
        plus_child,
        plus_violation_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn limits() -> EvolutionLimits {
        EvolutionLimits::default()
    }

    fn bsc_pair(w: (i64, i64), v: (i64, i64)) -> ChannelPair {
        ChannelPair::pair(
            SymmetricChannel::make_bsc(&rat(w.0, w.1)).unwrap(),
            SymmetricChannel::make_bsc(&rat(v.0, v.1)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn bsc_root_conditions_and_margins() {
        let pair = bsc_pair((1, 10), (1, 5));
        let report =
            check_conditions(&pair, &TransformPath::root(), Variant::Weak, &limits()).unwrap();
        assert!(report.all_hold());
        assert_eq!(report.cond_a.margin, rat(3, 5));
        assert_eq!(report.cond_b.margin, rat(1, 10));
        assert_eq!(report.cond_c.unwrap().margin, rat(1, 10));
    }

    #[test]
    fn counterexample_root_strict_conditions() {
        let pair = counterexample_pair();
        let report =
            check_conditions(&pair, &TransformPath::root(), Variant::Strict, &limits()).unwrap();
        assert!(report.all_hold());
        assert_eq!(report.cond_a.margin, rat(3, 10));
        assert_eq!(report.cond_b.margin, rat(1, 20));
        assert!(report.cond_c.is_none());
    }

    #[test]
    fn matched_pair_has_zero_margins_for_b_and_c() {
        let pair = ChannelPair::matched(SymmetricChannel::make_bsc(&rat(1, 5)).unwrap());
        for path in ["", "-", "+", "-+"] {
            let path: TransformPath = path.parse().unwrap();
            let report = check_conditions(&pair, &path, Variant::Weak, &limits()).unwrap();
            assert!(report.all_hold());
            assert_eq!(report.cond_b.margin, rat(0, 1));
            assert_eq!(report.cond_c.unwrap().margin, rat(0, 1));
        }
    }

    #[test]
    fn weak_sweep_of_ordered_bscs_records_the_tie_gap() {
        // The tie-inclusive lower-tail ordering (condition C) is NOT
        // preserved through every node: with ties present the binary
        // dominance argument does not apply, and this pair loses C at
        // `+---` even though the root satisfies all three conditions.
        // The upper-tail ordering (condition B) and the decision-error
        // ordering survive everywhere, exactly.
        let pair = bsc_pair((1, 10), (1, 5));
        let sweep = sweep_preservation(&pair, 4, Variant::Weak, &limits()).unwrap();
        assert_eq!(sweep.nodes.len(), 31);
        assert!(sweep.root().report.all_hold());
        assert!(sweep.nodes.iter().all(|n| n.report.cond_a.holds));
        assert!(sweep.nodes.iter().all(|n| n.report.cond_b.holds));
        assert!(sweep.nodes.iter().all(|n| !n.p_ge_gap.is_positive()));
        assert!(sweep.pe_ordering_violations().is_empty());
        let c_failures: Vec<String> = sweep
            .nodes
            .iter()
            .filter(|n| !n.report.cond_c.as_ref().unwrap().holds)
            .map(|n| n.path.to_string())
            .collect();
        assert_eq!(c_failures, ["+---"]);
        // The failing node sits below a tie-bearing parent: a recorded
        // finding, not an implementation bug.
        assert!(sweep.theorem_violations().is_empty());
        let findings = sweep.preservation_findings();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].path.to_string(), "+---");
    }

    #[test]
    fn weak_one_step_preservation_holds_for_tie_free_parents() {
        // Scoped form of the preservation statement that the dominance
        // argument actually proves: when neither parent law carries tie
        // mass, one transform step preserves A, B, and C.
        let pair = bsc_pair((1, 10), (1, 5));
        let tree = evolve_pair_tree(&pair, 4, &limits()).unwrap();
        let mut checked = 0;
        for node in &tree.nodes {
            if node.path.len() >= 4 {
                continue;
            }
            let parent_ok =
                condition_checks(&node.w_law, &node.v_law, Variant::Weak).all_hold();
            let tie_free = tie_split(&node.w_law).p_eq.is_zero()
                && tie_split(&node.v_law).p_eq.is_zero();
            if !(parent_ok && tie_free) {
                continue;
            }
            checked += 1;
            let (minus, plus) = tree.children(&node.path);
            for child in [minus.unwrap(), plus.unwrap()] {
                let report = condition_checks(&child.w_law, &child.v_law, Variant::Weak);
                assert!(report.all_hold(), "tie-free parent {} lost a condition", node.path);
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn strict_sweep_finds_the_plus_violation() {
        let pair = counterexample_pair();
        let sweep = sweep_preservation(&pair, 1, Variant::Strict, &limits()).unwrap();
        assert!(sweep.root().report.all_hold());
        assert!(sweep.theorem_violations().is_empty());
        let violations = sweep.preservation_findings();
        assert_eq!(violations.len(), 1);
        let node = violations[0];
        assert_eq!(node.path.to_string(), "+");
        assert_eq!(node.pe_mismatched, rat(3, 10));
        assert_eq!(node.pe_metric, rat(11, 40));
        assert!(!node.report.cond_b.holds);
        assert!(node.report.cond_a.holds);
    }

    #[test]
    fn reversed_bsc_pair_fails_condition_b_at_root() {
        let pair = bsc_pair((1, 5), (1, 10));
        let report =
            check_conditions(&pair, &TransformPath::root(), Variant::Weak, &limits()).unwrap();
        assert!(!report.cond_b.holds);
        assert!(report.cond_a.holds);
    }

    #[test]
    fn tie_process_counterexample_values() {
        let pair = counterexample_pair();
        let trace = track_tie_process(&pair, 1, &limits()).unwrap();
        assert!(trace.violations.is_empty());
        let root = &trace.nodes[0];
        assert_eq!(root.tie_mass, rat(0, 1));
        assert_eq!(root.minus_child, Some(rat(0, 1)));
        assert_eq!(root.plus_child, Some(rat(21, 50)));
        assert_eq!(root.submartingale_gap, Some(rat(21, 100)));
    }

    #[test]
    fn tie_process_of_metric_law_spectrum() {
        // Track the matched metric channel itself: root tie mass 1/2.
        let pair = ChannelPair::matched(counterexample_pair().metric_channel().clone());
        let trace = track_tie_process(&pair, 1, &limits()).unwrap();
        assert!(trace.violations.is_empty());
        let root = &trace.nodes[0];
        assert_eq!(root.tie_mass, rat(1, 2));
        assert_eq!(root.minus_child, Some(rat(3, 4)));
        assert_eq!(root.plus_child, Some(rat(33, 100)));
        // 3/4 + 33/100 = 108/100 >= 2p = 1.
        assert_eq!(root.submartingale_gap, Some(rat(1, 25)));
    }

    #[test]
    fn degenerate_tie_spectrum_has_zero_gap() {
        let pair = ChannelPair::matched(SymmetricChannel::make_bsc(&rat(1, 2)).unwrap());
        let trace = track_tie_process(&pair, 1, &limits()).unwrap();
        let root = &trace.nodes[0];
        assert_eq!(root.tie_mass, rat(1, 1));
        assert_eq!(root.minus_child, Some(rat(1, 1)));
        assert_eq!(root.plus_child, Some(rat(1, 1)));
        assert_eq!(root.submartingale_gap, Some(rat(0, 1)));
        assert!(trace.violations.is_empty());
    }

    #[test]
    fn monotone_checks_on_matched_bsc_plus() {
        let s = SymmetricChannel::make_bsc(&rat(3, 10)).unwrap().own_spectrum();
        let reports = monotone_conditional_checks(&s);
        let plus_upper = reports
            .iter()
            .find(|r| r.transform == TransformKind::Plus && r.upper_tail)
            .unwrap();
        assert_eq!(plus_upper.status, MonotoneStatus::Verified);
        assert_eq!(plus_upper.expectation_given_0, Some(rat(3, 10)));
        assert_eq!(plus_upper.expectation_given_1, Some(rat(1, 1)));
    }

    #[test]
    fn monotone_checks_on_counterexample_minus() {
        let pair = counterexample_pair();
        let s = pair.mismatched_spectrum().unwrap();
        let reports = monotone_conditional_checks(&s);
        for r in &reports {
            assert_eq!(r.status, MonotoneStatus::Verified, "{r:?}");
        }
        let minus_upper = reports
            .iter()
            .find(|r| r.transform == TransformKind::Minus && r.upper_tail)
            .unwrap();
        assert_eq!(minus_upper.expectation_given_0, Some(rat(3, 10)));
        assert_eq!(minus_upper.expectation_given_1, Some(rat(7, 10)));
    }

    #[test]
    fn monotone_degenerate_conditioning_is_reported() {
        let s = LrSpectrum::dirac(LrValue::one());
        let reports = monotone_conditional_checks(&s);
        assert!(reports
            .iter()
            .all(|r| r.status == MonotoneStatus::DegenerateConditioning));
    }

    #[test]
    fn alignment_matched_pair_is_boundary() {
        let pair = ChannelPair::matched(SymmetricChannel::make_bsc(&rat(1, 5)).unwrap());
        let report = check_pe_z_alignment(&pair, 2, &limits(), 60).unwrap();
        assert!(report
            .records
            .iter()
            .all(|r| r.verdict == AlignmentVerdict::Boundary));
    }

    #[test]
    fn alignment_holds_for_ordered_bscs() {
        let pair = bsc_pair((1, 10), (1, 5));
        let report = check_pe_z_alignment(&pair, 3, &limits(), 60).unwrap();
        assert!(report.misalignments().is_empty());
        for r in &report.records {
            assert_ne!(r.verdict, AlignmentVerdict::Indeterminate, "{}", r.path);
        }
    }

    #[test]
    fn alignment_records_counterexample_plus_child() {
        let pair = counterexample_pair();
        let report = check_pe_z_alignment(&pair, 1, &limits(), 60).unwrap();
        let plus = report
            .records
            .iter()
            .find(|r| r.path.to_string() == "+")
            .unwrap();
        assert_eq!(plus.pe_diff, rat(1, 40));
        assert!(plus.pe_diff.is_positive());
        // The verdict is recorded either way; what matters is that the
        // sign computation is certified.
        assert_ne!(plus.z_sign, SignVerdict::Indeterminate);
    }

    #[test]
    fn info_set_inclusion_examples() {
        let v = SymmetricChannel::make_bsc(&rat(1, 5)).unwrap();
        let w = SymmetricChannel::make_bsc(&rat(1, 10)).unwrap();
        let report = check_info_set_inclusion(&v, &w, 3, 4, &limits()).unwrap();
        assert!(report.included);

        let same = check_info_set_inclusion(&v, &v, 3, 4, &limits()).unwrap();
        assert_eq!(same.design_set, same.true_set);
        assert!(same.included);

        let bec = SymmetricChannel::make_bec(&rat(1, 2)).unwrap();
        let report = check_info_set_inclusion(&bec, &w, 3, 4, &limits()).unwrap();
        // Informational only; both sets exist and the verdict is recorded.
        assert_eq!(report.design_set.len(), 4);
        assert_eq!(report.true_set.len(), 4);
    }

    #[test]
    fn counterexample_report_summarizes_the_failure() {
        let report = counterexample_report(&limits()).unwrap();
        assert!(report.plus_violation_found);
        assert_eq!(report.root.pe_mismatched, rat(3, 10));
        assert_eq!(report.root.pe_metric, rat(7, 20));
        assert_eq!(report.plus_child.pe_mismatched, rat(3, 10));
        assert_eq!(report.plus_child.pe_metric, rat(11, 40));
        assert_eq!(report.minus_child.pe_mismatched, rat(21, 50));
        assert_eq!(report.minus_child.pe_metric, rat(91, 200));
    }
}
