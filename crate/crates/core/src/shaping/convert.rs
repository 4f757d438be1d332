//! Binary converter between amplitudes and bits.
//!
//! Each amplitude `a` becomes its `alpha`-bit representation
//! `[w_alpha .. w_2 w_1]`, written most significant bit first, where `w_1` is
//! the least significant bit of `a`. Sequences are concatenated in order.

use super::{AmplitudeDistribution, ShapingError};
use crate::Bit;

pub fn amplitudes_to_bits(amplitudes: &[u8], alpha: usize) -> Vec<Bit> {
    let mut bits = Vec::with_capacity(amplitudes.len() * alpha);
    for &a in amplitudes {
        debug_assert!((a as usize) < 1 << alpha);
        for i in (0..alpha).rev() {
            bits.push((a >> i) & 1);
        }
    }
    bits
}

pub fn bits_to_amplitudes(bits: &[Bit], alpha: usize) -> Result<Vec<u8>, ShapingError> {
    if alpha == 0 || bits.len() % alpha != 0 {
        return Err(ShapingError::InvalidParameters(format!(
            "{} bits do not split into {alpha}-bit amplitudes",
            bits.len()
        )));
    }
    Ok(bits
        .chunks(alpha)
        .map(|chunk| chunk.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect())
}

/// `P(W_i = 1)` for each bit significance `i = 1..=alpha`, returned with the
/// least significant bit first.
pub fn bit_marginals(dist: &AmplitudeDistribution) -> Vec<f64> {
    (0..dist.bits_per_symbol())
        .map(|i| {
            dist.pmf()
                .iter()
                .enumerate()
                .filter(|(a, _)| (a >> i) & 1 == 1)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}
