//! Exact-arithmetic analysis of polar codes under channel mismatch.
//!
//! The crate constructs polar codes for a design channel, evolves
//! likelihood-ratio spectra through the polar transforms with exact
//! rational arithmetic, checks robustness conditions and their
//! preservation, and validates the analytic error bounds against a Monte
//! Carlo mismatched successive-cancellation decoder.
//!
//! Modules map onto the pipeline:
//! - [`channel`]: symmetric channels, mismatched pairs, and their spectra;
//! - [`evolve`]: the exact plus/minus spectrum transforms and path trees;
//! - [`metrics`]: tie splits, decision-error probabilities, Bhattacharyya
//!   enclosures, and the exact cross-transform identities;
//! - [`robustness`]: condition checks, preservation sweeps, the tie-mass
//!   process, and the built-in plus-transform counterexample;
//! - [`construct`]: information-set selection and block-error bounds;
//! - [`sim`]: encoding, exact channel sampling, and successive
//!   cancellation decoding with exact tie handling.

pub mod channel;
pub mod construct;
pub mod evolve;
pub mod exact;
pub mod lr;
pub mod metrics;
pub mod robustness;
pub mod sim;
pub mod spectrum;

pub use channel::{ChannelAtom, ChannelError, ChannelFile, ChannelPair, SymmetricChannel};
pub use evolve::{EvolutionLimits, EvolutionMode, EvolveError, TransformKind, TransformPath};
pub use exact::{parse_rational, rat, Enclosure, Rational};
pub use lr::LrValue;
pub use spectrum::{LrSpectrum, SpectrumError};
