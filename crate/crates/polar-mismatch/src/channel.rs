//! Finite-output symmetric binary-input channels and mismatched pairs.
//!
//! A channel is symmetric when an involution of the output alphabet swaps
//! the roles of the two inputs: p0(pi(y)) = p1(y). Both channels of a
//! mismatched pair must live on the same alphabet and share the involution;
//! the likelihood-ratio spectra that drive every analysis in this crate are
//! derived here.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{is_probability, parse_rational, Rational};
use crate::lr::LrValue;
use crate::spectrum::LrSpectrum;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("channel parameter {name} = {value} is outside [{lo}, {hi}]")]
    ParameterRange {
        name: &'static str,
        value: String,
        lo: String,
        hi: String,
    },
    #[error("channel has no output symbols")]
    EmptyAlphabet,
    #[error("duplicate output symbol `{symbol}`")]
    DuplicateSymbol { symbol: String },
    #[error("involution references unknown symbol `{symbol}`")]
    UnknownSymbol { symbol: String },
    #[error("involution maps `{symbol}` inconsistently")]
    InvalidInvolution { symbol: String },
    #[error("probability {value} for symbol `{symbol}` is outside [0, 1]")]
    ProbabilityRange { symbol: String, value: String },
    #[error("input-{input} probabilities sum to {total}, expected 1")]
    NotNormalized { input: u8, total: String },
    #[error("symmetry violated at `{symbol}`: p0(pi(y)) = {lhs} but p1(y) = {rhs}")]
    SymmetryViolation {
        symbol: String,
        lhs: String,
        rhs: String,
    },
    #[error("involution fixed point `{symbol}` has p0 = {p0} != p1 = {p1}")]
    FixedPointImbalance {
        symbol: String,
        p0: String,
        p1: String,
    },
    #[error("paired channels have different alphabets")]
    AlphabetMismatch,
    #[error("paired channels have different involutions")]
    InvolutionMismatch,
    #[error("symbol `{symbol}` is reachable under the true channel but the metric assigns it zero probability under both inputs")]
    UndefinedMetric { symbol: String },
    #[error("probability list for input {input} has {got} entries, expected {expected}")]
    LengthMismatch { input: u8, got: usize, expected: usize },
    #[error("invalid rational: {0}")]
    BadRational(String),
}

/// One output symbol with its two conditional probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelAtom {
    pub symbol: String,
    pub p0: Rational,
    pub p1: Rational,
}

/// Binary-input channel with finite output alphabet, symmetric under an
/// explicit output involution. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricChannel {
    symbols: Vec<String>,
    p0: Vec<Rational>,
    p1: Vec<Rational>,
    involution: Vec<usize>,
}

impl SymmetricChannel {
    /// Validating constructor over explicit atoms. The involution is given
    /// as symbol-name pairs; symbols not mentioned are fixed points.
    pub fn make_symmetric(
        atoms: Vec<ChannelAtom>,
        involution_pairs: &[(String, String)],
    ) -> Result<SymmetricChannel, ChannelError> {
        if atoms.is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        let symbols: Vec<String> = atoms.iter().map(|a| a.symbol.clone()).collect();
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(ChannelError::DuplicateSymbol { symbol: s.clone() });
            }
        }
        let index_of = |name: &str| -> Result<usize, ChannelError> {
            symbols
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| ChannelError::UnknownSymbol {
                    symbol: name.to_string(),
                })
        };
        let mut involution: Vec<usize> = (0..symbols.len()).collect();
        for (a, b) in involution_pairs {
            let i = index_of(a)?;
            let j = index_of(b)?;
            // A symbol may appear in at most one pair.
            if involution[i] != i || involution[j] != j {
                return Err(ChannelError::InvalidInvolution { symbol: a.clone() });
            }
            involution[i] = j;
            involution[j] = i;
        }
        let p0: Vec<Rational> = atoms.iter().map(|a| a.p0.clone()).collect();
        let p1: Vec<Rational> = atoms.iter().map(|a| a.p1.clone()).collect();
        let channel = SymmetricChannel {
            symbols,
            p0,
            p1,
            involution,
        };
        channel.validate()?;
        Ok(channel)
    }

    fn validate(&self) -> Result<(), ChannelError> {
        for (input, probs) in [(0u8, &self.p0), (1u8, &self.p1)] {
            for (y, p) in probs.iter().enumerate() {
                if !is_probability(p) {
                    return Err(ChannelError::ProbabilityRange {
                        symbol: self.symbols[y].clone(),
                        value: p.to_string(),
                    });
                }
            }
            let total: Rational = probs.iter().cloned().sum();
            if !total.is_one() {
                return Err(ChannelError::NotNormalized {
                    input,
                    total: total.to_string(),
                });
            }
        }
        for y in 0..self.symbols.len() {
            let mirrored = &self.p0[self.involution[y]];
            if *mirrored != self.p1[y] {
                if self.involution[y] == y {
                    return Err(ChannelError::FixedPointImbalance {
                        symbol: self.symbols[y].clone(),
                        p0: self.p0[y].to_string(),
                        p1: self.p1[y].to_string(),
                    });
                }
                return Err(ChannelError::SymmetryViolation {
                    symbol: self.symbols[y].clone(),
                    lhs: mirrored.to_string(),
                    rhs: self.p1[y].to_string(),
                });
            }
        }
        Ok(())
    }

    /// Binary symmetric channel with crossover probability `eps <= 1/2`.
    pub fn make_bsc(eps: &Rational) -> Result<SymmetricChannel, ChannelError> {
        if eps.is_negative() || *eps > crate::exact::rat(1, 2) {
            return Err(ChannelError::ParameterRange {
                name: "eps",
                value: eps.to_string(),
                lo: "0".into(),
                hi: "1/2".into(),
            });
        }
        let one = Rational::one();
        SymmetricChannel::make_symmetric(
            vec![
                ChannelAtom {
                    symbol: "0".into(),
                    p0: &one - eps,
                    p1: eps.clone(),
                },
                ChannelAtom {
                    symbol: "1".into(),
                    p0: eps.clone(),
                    p1: &one - eps,
                },
            ],
            &[("0".into(), "1".into())],
        )
    }

    /// Binary erasure channel with erasure probability `delta`.
    pub fn make_bec(delta: &Rational) -> Result<SymmetricChannel, ChannelError> {
        if !is_probability(delta) {
            return Err(ChannelError::ParameterRange {
                name: "delta",
                value: delta.to_string(),
                lo: "0".into(),
                hi: "1".into(),
            });
        }
        let one = Rational::one();
        SymmetricChannel::make_symmetric(
            vec![
                ChannelAtom {
                    symbol: "0".into(),
                    p0: &one - delta,
                    p1: Rational::zero(),
                },
                ChannelAtom {
                    symbol: "e".into(),
                    p0: delta.clone(),
                    p1: delta.clone(),
                },
                ChannelAtom {
                    symbol: "1".into(),
                    p0: Rational::zero(),
                    p1: &one - delta,
                },
            ],
            &[("0".into(), "1".into())],
        )
    }

    pub fn alphabet_len(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn p0(&self, y: usize) -> &Rational {
        &self.p0[y]
    }

    pub fn p1(&self, y: usize) -> &Rational {
        &self.p1[y]
    }

    pub fn involution(&self) -> &[usize] {
        &self.involution
    }

    pub fn mirror(&self, y: usize) -> usize {
        self.involution[y]
    }

    /// Likelihood ratio of symbol `y`; `None` when both probabilities are 0.
    pub fn lr(&self, y: usize) -> Option<LrValue> {
        LrValue::from_ratio(&self.p1[y], &self.p0[y])
    }

    /// Law of the channel's own likelihood ratio under its input-0 measure.
    /// Symbols with zero input-0 probability carry no mass, so infinite
    /// ratios never appear here.
    pub fn own_spectrum(&self) -> LrSpectrum {
        self.spectrum_under(self)
            .expect("own-measure spectrum of a validated channel")
    }

    /// Law of this channel's likelihood ratio under `measure`'s input-0
    /// probabilities. Both channels must share the alphabet.
    fn spectrum_under(&self, measure: &SymmetricChannel) -> Result<LrSpectrum, ChannelError> {
        let mut points = Vec::with_capacity(self.symbols.len());
        for y in 0..self.symbols.len() {
            let mass = measure.p0[y].clone();
            if mass.is_zero() {
                continue;
            }
            let lr = self.lr(y).ok_or_else(|| ChannelError::UndefinedMetric {
                symbol: self.symbols[y].clone(),
            })?;
            points.push((lr, mass));
        }
        Ok(LrSpectrum::from_unmerged(points).expect("channel rows sum to one"))
    }
}

/// True channel and decoding-metric channel on a shared, identically
/// symmetrized alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPair {
    w: SymmetricChannel,
    v: SymmetricChannel,
}

impl ChannelPair {
    /// Validates alphabet, involution, and absolute continuity: every
    /// symbol the true channel can emit must have a defined metric ratio.
    pub fn pair(w: SymmetricChannel, v: SymmetricChannel) -> Result<ChannelPair, ChannelError> {
        if w.symbols != v.symbols {
            return Err(ChannelError::AlphabetMismatch);
        }
        if w.involution != v.involution {
            return Err(ChannelError::InvolutionMismatch);
        }
        for y in 0..w.symbols.len() {
            if !w.p0[y].is_zero() && v.p0[y].is_zero() && v.p1[y].is_zero() {
                return Err(ChannelError::UndefinedMetric {
                    symbol: w.symbols[y].clone(),
                });
            }
        }
        Ok(ChannelPair { w, v })
    }

    /// Matched pair of a channel with itself.
    pub fn matched(v: SymmetricChannel) -> ChannelPair {
        ChannelPair { w: v.clone(), v }
    }

    pub fn true_channel(&self) -> &SymmetricChannel {
        &self.w
    }

    pub fn metric_channel(&self) -> &SymmetricChannel {
        &self.v
    }

    /// Law of the metric likelihood ratio under the true channel's
    /// input-0 measure.
    pub fn mismatched_spectrum(&self) -> Result<LrSpectrum, ChannelError> {
        self.v.spectrum_under(&self.w)
    }

    /// Own-measure law of the metric channel.
    pub fn metric_spectrum(&self) -> LrSpectrum {
        self.v.own_spectrum()
    }
}

/// Serialization schema for channel files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub symbols: Vec<String>,
    pub p0: Vec<String>,
    pub p1: Vec<String>,
    pub involution: Vec<(String, String)>,
}

impl ChannelFile {
    pub fn to_channel(&self) -> Result<SymmetricChannel, ChannelError> {
        if self.p0.len() != self.symbols.len() {
            return Err(ChannelError::LengthMismatch {
                input: 0,
                got: self.p0.len(),
                expected: self.symbols.len(),
            });
        }
        if self.p1.len() != self.symbols.len() {
            return Err(ChannelError::LengthMismatch {
                input: 1,
                got: self.p1.len(),
                expected: self.symbols.len(),
            });
        }
        let parse = |s: &str| parse_rational(s).map_err(|e| ChannelError::BadRational(e.to_string()));
        let mut atoms = Vec::with_capacity(self.symbols.len());
        for (i, symbol) in self.symbols.iter().enumerate() {
            atoms.push(ChannelAtom {
                symbol: symbol.clone(),
                p0: parse(&self.p0[i])?,
                p1: parse(&self.p1[i])?,
            });
        }
        SymmetricChannel::make_symmetric(atoms, &self.involution)
    }

    pub fn from_channel(ch: &SymmetricChannel) -> ChannelFile {
        let mut pairs = Vec::new();
        for y in 0..ch.alphabet_len() {
            let m = ch.mirror(y);
            if m > y {
                pairs.push((ch.symbols[y].clone(), ch.symbols[m].clone()));
            }
        }
        ChannelFile {
            symbols: ch.symbols.clone(),
            p0: ch.p0.iter().map(|p| p.to_string()).collect(),
            p1: ch.p1.iter().map(|p| p.to_string()).collect(),
            involution: pairs,
        }
    }
}
