//! Distribution matching: uniform bits to shaped amplitude sequences.
//!
//! Two fixed-to-fixed matchers are provided. [`ShellMapper`] indexes the
//! `2^k` most probable length-`n` sequences (ordered by quantized
//! self-information, ties broken lexicographically), which minimizes the
//! normalized KL divergence for a given `k`. [`CcdmMapper`] indexes the first
//! `2^k` permutations of one fixed composition. Both are exact enumerative
//! codes over arbitrary-precision integers.

mod ccdm;
mod convert;
mod distribution;
mod smdm;

pub use ccdm::{largest_remainder_composition, CcdmMapper};
pub use convert::{amplitudes_to_bits, bit_marginals, bits_to_amplitudes};
pub use distribution::AmplitudeDistribution;
pub use smdm::{ShellBoundary, ShellMapper, DEFAULT_WEIGHT_SCALE};

use crate::Bit;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

/// Distribution matcher error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapingError {
    #[error("invalid amplitude distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid matcher parameters: {0}")]
    InvalidParameters(String),
    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("symbol {0} outside the amplitude alphabet")]
    InvalidSymbol(u8),
    #[error("index does not fit in the matcher input width")]
    IndexOutOfRange,
    /// The amplitude sequence is not a codeword of the matcher.
    #[error("amplitude sequence is not in the codebook")]
    NotInCodebook,
}

/// Common interface of the fixed-to-fixed matchers.
pub trait DistributionMatcher {
    /// Number of input bits `k`.
    fn input_bits(&self) -> usize;

    /// Number of output amplitudes `n`.
    fn output_len(&self) -> usize;

    /// Target distribution the matcher was built for.
    fn distribution(&self) -> &AmplitudeDistribution;

    /// Maps an index in `[0, 2^k)` to its amplitude sequence.
    fn encode_index(&self, index: &BigUint) -> Result<Vec<u8>, ShapingError>;

    /// Inverse of [`encode_index`](Self::encode_index).
    fn decode_index(&self, amplitudes: &[u8]) -> Result<BigUint, ShapingError>;

    /// Normalized KL divergence between the codebook and the target product
    /// distribution, in bits per symbol.
    fn normalized_kl(&self) -> f64;

    /// Encodes `k` message bits, read most significant bit first.
    fn encode(&self, msg: &[Bit]) -> Result<Vec<u8>, ShapingError> {
        if msg.len() != self.input_bits() {
            return Err(ShapingError::LengthMismatch {
                expected: self.input_bits(),
                got: msg.len(),
            });
        }
        self.encode_index(&bits_to_index(msg))
    }

    /// Decodes an amplitude sequence back to its `k` message bits.
    fn decode(&self, amplitudes: &[u8]) -> Result<Vec<Bit>, ShapingError> {
        let index = self.decode_index(amplitudes)?;
        Ok(index_to_bits(&index, self.input_bits()))
    }
}

/// Selects one of the two matcher families at run time.
#[derive(Debug, Clone)]
pub enum Matcher {
    Shell(ShellMapper),
    ConstantComposition(CcdmMapper),
}

impl DistributionMatcher for Matcher {
    fn input_bits(&self) -> usize {
        match self {
            Matcher::Shell(m) => m.input_bits(),
            Matcher::ConstantComposition(m) => m.input_bits(),
        }
    }

    fn output_len(&self) -> usize {
        match self {
            Matcher::Shell(m) => m.output_len(),
            Matcher::ConstantComposition(m) => m.output_len(),
        }
    }

    fn distribution(&self) -> &AmplitudeDistribution {
        match self {
            Matcher::Shell(m) => m.distribution(),
            Matcher::ConstantComposition(m) => m.distribution(),
        }
    }

    fn encode_index(&self, index: &BigUint) -> Result<Vec<u8>, ShapingError> {
        match self {
            Matcher::Shell(m) => m.encode_index(index),
            Matcher::ConstantComposition(m) => m.encode_index(index),
        }
    }

    fn decode_index(&self, amplitudes: &[u8]) -> Result<BigUint, ShapingError> {
        match self {
            Matcher::Shell(m) => m.decode_index(amplitudes),
            Matcher::ConstantComposition(m) => m.decode_index(amplitudes),
        }
    }

    fn normalized_kl(&self) -> f64 {
        match self {
            Matcher::Shell(m) => m.normalized_kl(),
            Matcher::ConstantComposition(m) => m.normalized_kl(),
        }
    }
}

impl Matcher {
    /// Average symbol distribution over the codebook.
    pub fn realized_pmf(&self) -> Vec<f64> {
        match self {
            Matcher::Shell(m) => m.realized_pmf(),
            Matcher::ConstantComposition(m) => m
                .composition()
                .iter()
                .map(|&c| c as f64 / m.output_len() as f64)
                .collect(),
        }
    }
}

/// Interprets `bits` as an unsigned integer, most significant bit first.
pub fn bits_to_index(bits: &[Bit]) -> BigUint {
    let mut index = BigUint::zero();
    for &b in bits {
        index <<= 1u32;
        if b != 0 {
            index |= BigUint::one();
        }
    }
    index
}

/// Writes the low `k` bits of `index`, most significant bit first.
pub fn index_to_bits(index: &BigUint, k: usize) -> Vec<Bit> {
    (0..k)
        .rev()
        .map(|i| index.bit(i as u64) as Bit)
        .collect()
}

pub(crate) fn pow2(k: usize) -> BigUint {
    BigUint::one() << k
}
