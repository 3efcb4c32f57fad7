//! Monte Carlo validation: polar encoding, exact channel sampling, and
//! mismatched successive-cancellation decoding with exact tie handling.
//!
//! Both the encoder and decoder use the natural-order block recursion: a
//! block splits into halves, the first half carries the XOR stream and the
//! second half the pass-through stream. Correctness is defined by
//! encoder/decoder consistency and pinned by an exhaustive per-stage
//! enumeration oracle at small blocklengths.
//!
//! Reproducibility: every trial derives its own counter-based generator
//! streams from (seed, trial index, purpose), so trials are
//! order-independent and a parallel run reproduces the serial one
//! bit for bit.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelError, ChannelPair, SymmetricChannel};
use crate::construct::{bound_block_error, CodeSpec, ConstructError};
use crate::evolve::EvolutionLimits;
use crate::exact::Rational;
use crate::lr::LrValue;

/// Exact decoding is limited to this blocklength; beyond it use the
/// log-domain mode.
pub const EXACT_MODE_MAX_N: u64 = 1 << 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("input length {len} is not a power of two")]
    NotPowerOfTwo { len: usize },
    #[error("trial budget must be positive")]
    NoTrials,
    #[error("exact mode supports blocklengths up to {max}, got {n}")]
    BlocklengthTooLarge { n: u64, max: u64 },
    #[error("tie tolerance must be positive in log-domain mode")]
    BadTieTolerance,
    #[error("received symbol vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("metric is undefined for received symbol `{symbol}`")]
    UndefinedMetric { symbol: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

/// Decoder arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Arithmetic {
    Exact,
    /// Log-domain floats; decisions within `tie_tol` of the threshold are
    /// recorded as tie events.
    LogFloat { tie_tol: f64 },
}

/// Full Monte Carlo configuration. Identical configs (seed included)
/// produce bit-for-bit identical reports.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub pair: ChannelPair,
    pub spec: CodeSpec,
    pub trials: u64,
    pub seed: u64,
    pub arithmetic: Arithmetic,
}

/// Applies the (u1 xor u2, u2) butterfly recursively, n stages, in natural
/// order: the first half of each block absorbs the XOR of the halves.
pub fn encode(u: &[u8]) -> Result<Vec<u8>, SimError> {
    if u.is_empty() || !u.len().is_power_of_two() {
        return Err(SimError::NotPowerOfTwo { len: u.len() });
    }
    let mut x: Vec<u8> = u.iter().map(|b| b & 1).collect();
    let mut step = x.len() / 2;
    while step >= 1 {
        let mut start = 0;
        while start < x.len() {
            for j in start..start + step {
                x[j] ^= x[j + step];
            }
            start += 2 * step;
        }
        step /= 2;
    }
    Ok(x)
}

/// Exact sampler for a rational output distribution, using integer draws
/// over the common denominator.
struct ChannelSampler {
    /// Cumulative numerators over the common denominator, one per symbol.
    cumulative: Vec<BigUint>,
    total: BigUint,
    /// Fast path when the denominator fits in a machine word.
    small: Option<(Vec<u64>, u64)>,
}

impl ChannelSampler {
    fn new(ch: &SymmetricChannel) -> ChannelSampler {
        let mut denom = BigUint::from(1u32);
        for y in 0..ch.alphabet_len() {
            denom = num_integer::lcm(denom, ch.p0(y).denom().magnitude().clone());
        }
        let mut cumulative = Vec::with_capacity(ch.alphabet_len());
        let mut acc = BigUint::zero();
        for y in 0..ch.alphabet_len() {
            let p = ch.p0(y);
            acc += p.numer().magnitude() * (&denom / p.denom().magnitude());
            cumulative.push(acc.clone());
        }
        let small = denom.to_u64().map(|total| {
            let cum: Vec<u64> = cumulative.iter().map(|c| c.to_u64().unwrap()).collect();
            (cum, total)
        });
        ChannelSampler {
            cumulative,
            total: denom,
            small,
        }
    }

    /// Draws one output symbol for input 0.
    fn draw_zero(&self, rng: &mut ChaCha8Rng) -> usize {
        if let Some((cum, total)) = &self.small {
            let r = rng.gen_range(0..*total);
            return cum.partition_point(|c| *c <= r);
        }
        let r = rng.gen_biguint_below(&self.total);
        self.cumulative.partition_point(|c| *c <= r)
    }
}

/// Draws i.i.d. outputs of `ch` for the input bits `x`. Input 1 is sampled
/// as the involution image of an input-0 draw, so the symmetric law is
/// honored exactly.
pub fn sample_channel(ch: &SymmetricChannel, x: &[u8], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let sampler = ChannelSampler::new(ch);
    sample_with(ch, &sampler, x, rng)
}

fn sample_with(
    ch: &SymmetricChannel,
    sampler: &ChannelSampler,
    x: &[u8],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    x.iter()
        .map(|bit| {
            let y = sampler.draw_zero(rng);
            if bit & 1 == 1 {
                ch.mirror(y)
            } else {
                y
            }
        })
        .collect()
}

/// One decoded stage: the decision statistic and whether it came out of an
/// indeterminate combination (possible only when the metric assigns zero
/// probabilities and earlier estimates were wrong).
#[derive(Debug, Clone, PartialEq)]
pub struct StageLr {
    pub lr: LrValue,
    pub indeterminate: bool,
}

/// Decoder output with per-stage diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// All N estimates, frozen positions included.
    pub u_hat: Vec<u8>,
    /// Number of fair-coin decisions taken at information positions.
    pub ties: u64,
    /// Exact decision statistics per stage (exact mode only).
    pub stage_lrs: Vec<StageLr>,
}

struct ExactDecoder<'a> {
    frozen: &'a [Option<u8>],
    decisions: Vec<u8>,
    stage_lrs: Vec<StageLr>,
    ties: u64,
    rng: &'a mut ChaCha8Rng,
}

impl ExactDecoder<'_> {
    fn leaf(&mut self, lr: LrValue, indeterminate: bool) -> u8 {
        let stage = self.decisions.len();
        let bit = match self.frozen[stage] {
            Some(b) => b,
            None => match lr.cmp_one() {
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Equal => {
                    self.ties += 1;
                    u8::from(self.rng.gen::<bool>())
                }
            },
        };
        self.stage_lrs.push(StageLr { lr, indeterminate });
        self.decisions.push(bit);
        bit
    }

    /// Decodes the subtree fed by `alpha`, returning the re-encoded block.
    fn descend(&mut self, alpha: &[(LrValue, bool)]) -> Vec<u8> {
        if alpha.len() == 1 {
            let (lr, ind) = alpha[0].clone();
            return vec![self.leaf(lr, ind)];
        }
        let half = alpha.len() / 2;
        let first: Vec<(LrValue, bool)> = (0..half)
            .map(|k| {
                let (a, ia) = &alpha[k];
                let (b, ib) = &alpha[k + half];
                (a.minus_combine(b), *ia || *ib)
            })
            .collect();
        let left = self.descend(&first);
        let second: Vec<(LrValue, bool)> = (0..half)
            .map(|k| {
                let (a, ia) = &alpha[k];
                let (b, ib) = &alpha[k + half];
                let adjusted = if left[k] == 1 { a.recip() } else { a.clone() };
                match adjusted.checked_mul(b) {
                    Some(lr) => (lr, *ia || *ib),
                    // Both conditional likelihoods vanish: no information.
                    None => (LrValue::one(), true),
                }
            })
            .collect();
        let right = self.descend(&second);
        let mut beta = Vec::with_capacity(alpha.len());
        for k in 0..half {
            beta.push(left[k] ^ right[k]);
        }
        beta.extend_from_slice(&right);
        beta
    }
}

/// Exact-arithmetic successive cancellation decoding of `y` against the
/// metric channel, with frozen positions copied from the spec and ties
/// decided by fair coins from `rng`.
pub fn scd_decode(
    y: &[usize],
    spec: &CodeSpec,
    metric: &SymmetricChannel,
    rng: &mut ChaCha8Rng,
) -> Result<DecodeOutput, SimError> {
    let frozen = spec.frozen_table();
    scd_decode_with_frozen(y, &frozen, metric, rng)
}

/// Like [`scd_decode`] with an explicit frozen table: `Some(bit)` pins a
/// position, `None` marks an information position.
pub fn scd_decode_with_frozen(
    y: &[usize],
    frozen: &[Option<u8>],
    metric: &SymmetricChannel,
    rng: &mut ChaCha8Rng,
) -> Result<DecodeOutput, SimError> {
    if y.len() != frozen.len() {
        return Err(SimError::LengthMismatch {
            got: y.len(),
            expected: frozen.len(),
        });
    }
    let alpha: Vec<(LrValue, bool)> = y
        .iter()
        .map(|&sym| {
            metric
                .lr(sym)
                .map(|lr| (lr, false))
                .ok_or_else(|| SimError::UndefinedMetric {
                    symbol: metric.symbols()[sym].clone(),
                })
        })
        .collect::<Result<_, _>>()?;
    let mut decoder = ExactDecoder {
        frozen,
        decisions: Vec::with_capacity(y.len()),
        stage_lrs: Vec::with_capacity(y.len()),
        ties: 0,
        rng,
    };
    decoder.descend(&alpha);
    Ok(DecodeOutput {
        u_hat: decoder.decisions,
        ties: decoder.ties,
        stage_lrs: decoder.stage_lrs,
    })
}

/// Log-domain decoder state; decisions within `tie_tol` of the threshold
/// are recorded and resolved by fair coin.
struct FloatDecoder<'a> {
    frozen: &'a [Option<u8>],
    decisions: Vec<u8>,
    ties: u64,
    tie_tol: f64,
    rng: &'a mut ChaCha8Rng,
}

impl FloatDecoder<'_> {
    fn leaf(&mut self, llr: f64) -> u8 {
        let stage = self.decisions.len();
        let bit = match self.frozen[stage] {
            Some(b) => b,
            None => {
                if llr.is_nan() || llr.abs() <= self.tie_tol {
                    self.ties += 1;
                    u8::from(self.rng.gen::<bool>())
                } else if llr > 0.0 {
                    1
                } else {
                    0
                }
            }
        };
        self.decisions.push(bit);
        bit
    }

    fn descend(&mut self, alpha: &[f64]) -> Vec<u8> {
        if alpha.len() == 1 {
            return vec![self.leaf(alpha[0])];
        }
        let half = alpha.len() / 2;
        let first: Vec<f64> = (0..half)
            .map(|k| llr_minus(alpha[k], alpha[k + half]))
            .collect();
        let left = self.descend(&first);
        let second: Vec<f64> = (0..half)
            .map(|k| {
                let a = if left[k] == 1 { -alpha[k] } else { alpha[k] };
                a + alpha[k + half]
            })
            .collect();
        let right = self.descend(&second);
        let mut beta = Vec::with_capacity(alpha.len());
        for k in 0..half {
            beta.push(left[k] ^ right[k]);
        }
        beta.extend_from_slice(&right);
        beta
    }
}

/// Log-ratio combination of the first transform:
/// ln of (e^a + e^b) / (1 + e^(a+b)), computed stably.
fn llr_minus(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        // Limits of the exact table: a sure pair pins the XOR bit.
        return match (a.is_infinite(), b.is_infinite()) {
            (true, true) => {
                if a.signum() == b.signum() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            (true, false) => {
                if a > 0.0 {
                    -b
                } else {
                    b
                }
            }
            (false, true) => {
                if b > 0.0 {
                    -a
                } else {
                    a
                }
            }
            (false, false) => unreachable!(),
        };
    }
    -2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh()
}

fn llr_of(metric: &SymmetricChannel, sym: usize) -> Result<f64, SimError> {
    match metric.lr(sym) {
        None => Err(SimError::UndefinedMetric {
            symbol: metric.symbols()[sym].clone(),
        }),
        Some(LrValue::Zero) => Ok(f64::NEG_INFINITY),
        Some(LrValue::Infinity) => Ok(f64::INFINITY),
        Some(LrValue::Finite(r)) => {
            let num = r.numer().to_f64().unwrap_or(f64::MAX);
            let den = r.denom().to_f64().unwrap_or(f64::MAX);
            Ok(num.ln() - den.ln())
        }
    }
}

fn scd_decode_float(
    y: &[usize],
    frozen: &[Option<u8>],
    metric: &SymmetricChannel,
    tie_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DecodeOutput, SimError> {
    if y.len() != frozen.len() {
        return Err(SimError::LengthMismatch {
            got: y.len(),
            expected: frozen.len(),
        });
    }
    let alpha: Vec<f64> = y
        .iter()
        .map(|&sym| llr_of(metric, sym))
        .collect::<Result<_, _>>()?;
    let mut decoder = FloatDecoder {
        frozen,
        decisions: Vec::with_capacity(y.len()),
        ties: 0,
        tie_tol,
        rng,
    };
    decoder.descend(&alpha);
    Ok(DecodeOutput {
        u_hat: decoder.decisions,
        ties: decoder.ties,
        stage_lrs: Vec::new(),
    })
}

/// Monte Carlo outcome with the analytic comparison attached.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub trials: u64,
    pub block_errors: u64,
    pub bler_hat: f64,
    pub wilson_ci_95: (f64, f64),
    /// Sum of per-index mismatched decision-error probabilities over the
    /// information set.
    #[serde(with = "crate::exact::serde_rational")]
    pub analytic_bound: Rational,
    pub analytic_bound_f64: f64,
    pub tie_events: u64,
    pub seed: u64,
    /// True when the empirical rate exceeds the analytic bound by more
    /// than five standard errors.
    pub exceeds_bound_5_sigma: bool,
}

/// Per-trial record for the optional trace output.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub bit_errors: u64,
    pub ties: u64,
}

// Stream derivation constants: one sub-stream per purpose per trial.
const STREAM_MESSAGE: u64 = 0;
const STREAM_CHANNEL: u64 = 1;
const STREAM_TIES: u64 = 2;
const STREAMS_PER_TRIAL: u64 = 4;

fn trial_rng(seed: u64, trial: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * STREAMS_PER_TRIAL + purpose);
    rng
}

pub fn run_monte_carlo(cfg: &SimConfig) -> Result<SimReport, SimError> {
    let (report, _) = run_monte_carlo_inner(cfg, false)?;
    Ok(report)
}

/// Like [`run_monte_carlo`] but also returns per-trial records in trial
/// order.
pub fn run_monte_carlo_traced(
    cfg: &SimConfig,
) -> Result<(SimReport, Vec<TrialRecord>), SimError> {
    let (report, trace) = run_monte_carlo_inner(cfg, true)?;
    Ok((report, trace))
}

fn run_monte_carlo_inner(
    cfg: &SimConfig,
    collect_trace: bool,
) -> Result<(SimReport, Vec<TrialRecord>), SimError> {
    if cfg.trials == 0 {
        return Err(SimError::NoTrials);
    }
    let n = cfg.spec.block_len();
    match cfg.arithmetic {
        Arithmetic::Exact => {
            if n > EXACT_MODE_MAX_N {
                return Err(SimError::BlocklengthTooLarge {
                    n,
                    max: EXACT_MODE_MAX_N,
                });
            }
        }
        Arithmetic::LogFloat { tie_tol } => {
            if !(tie_tol > 0.0) {
                return Err(SimError::BadTieTolerance);
            }
        }
    }
    let truth = cfg.pair.true_channel();
    let metric = cfg.pair.metric_channel();
    let frozen = cfg.spec.frozen_table();
    let info_positions: Vec<usize> = frozen
        .iter()
        .enumerate()
        .filter(|(_, f)| f.is_none())
        .map(|(k, _)| k)
        .collect();
    let sampler = ChannelSampler::new(truth);
    let limits = EvolutionLimits::default();
    let bound = bound_block_error(&cfg.pair, &cfg.spec, &limits)?;

    let run_trial = |trial: u64| -> Result<(u64, u64), SimError> {
        let mut msg_rng = trial_rng(cfg.seed, trial, STREAM_MESSAGE);
        let mut ch_rng = trial_rng(cfg.seed, trial, STREAM_CHANNEL);
        let mut tie_rng = trial_rng(cfg.seed, trial, STREAM_TIES);
        let mut u = vec![0u8; n as usize];
        for (k, slot) in frozen.iter().enumerate() {
            u[k] = match slot {
                Some(bit) => *bit,
                None => u8::from(msg_rng.gen::<bool>()),
            };
        }
        let x = encode(&u)?;
        let y = sample_with(truth, &sampler, &x, &mut ch_rng);
        let decoded = match cfg.arithmetic {
            Arithmetic::Exact => scd_decode_with_frozen(&y, &frozen, metric, &mut tie_rng)?,
            Arithmetic::LogFloat { tie_tol } => {
                scd_decode_float(&y, &frozen, metric, tie_tol, &mut tie_rng)?
            }
        };
        let bit_errors = info_positions
            .iter()
            .filter(|&&k| decoded.u_hat[k] != u[k])
            .count() as u64;
        Ok((bit_errors, decoded.ties))
    };

    let outcomes: Result<Vec<(u64, u64)>, SimError> = (0..cfg.trials)
        .into_par_iter()
        .map(run_trial)
        .collect();
    let outcomes = outcomes?;

    let block_errors = outcomes.iter().filter(|(e, _)| *e > 0).count() as u64;
    let tie_events: u64 = outcomes.iter().map(|(_, t)| t).sum();
    let trace = if collect_trace {
        outcomes
            .iter()
            .enumerate()
            .map(|(trial, (bit_errors, ties))| TrialRecord {
                trial: trial as u64,
                bit_errors: *bit_errors,
                ties: *ties,
            })
            .collect()
    } else {
        Vec::new()
    };

    let trials_f = cfg.trials as f64;
    let bler_hat = block_errors as f64 / trials_f;
    let bound_f64 = rational_to_f64(&bound.sum_pe_mismatched);
    let sigma = (bler_hat * (1.0 - bler_hat) / trials_f).sqrt();
    let exceeds = bler_hat > bound_f64 + 5.0 * sigma && block_errors > 0;
    let report = SimReport {
        trials: cfg.trials,
        block_errors,
        bler_hat,
        wilson_ci_95: wilson_interval(block_errors, cfg.trials),
        analytic_bound: bound.sum_pe_mismatched,
        analytic_bound_f64: bound_f64,
        tie_events,
        seed: cfg.seed,
        exceeds_bound_5_sigma: exceeds,
    };
    Ok((report, trace))
}

fn rational_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::MAX) / r.denom().to_f64().unwrap_or(1.0)
}

/// Wilson 95% confidence interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
