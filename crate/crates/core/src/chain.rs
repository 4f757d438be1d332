//! The full transmit chain and its noiseless inverse.
//!
//! The CRC word `u_0 .. u_{L+m-1}` carries the remainder in `u_0 .. u_{m-1}`
//! and the message in the rest. It is fed to the convolutional encoder
//! message first, `u_m .. u_{L+m-1}, u_0 .. u_{m-1}`, in groups of `k0` bits
//! read most significant bit first. With `k0` equal to the bits per amplitude
//! every frame of the first `n` carries exactly one amplitude, and its value
//! equals that amplitude; the remainder follows in the last `m / k0` frames.

use crate::crc::CrcSpec;
use crate::modulation::{Constellation, ModulationError, SignalPrior};
use crate::shaping::{
    amplitudes_to_bits, bits_to_amplitudes, AmplitudeDistribution, DistributionMatcher, Matcher,
    ShapingError,
};
use crate::tbcc::{build_trellis, ConvCodeSpec, TailBitingEncoder, TbccError, Trellis};
use crate::Bit;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error(transparent)]
    Shaping(#[from] ShapingError),
    #[error(transparent)]
    Tbcc(#[from] TbccError),
    #[error(transparent)]
    Modulation(#[from] ModulationError),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("CRC check failed")]
    CrcFailed,
}

/// Prior used for the decoder metric at each trellis position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorMode {
    /// Shaped amplitudes on message frames, uniform on the CRC frames.
    #[default]
    PerPosition,
    /// Shaped amplitudes everywhere.
    Homogeneous,
}

/// Everything produced while transmitting one message.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub amplitudes: Vec<u8>,
    pub word: Vec<Bit>,
    pub frames: Vec<usize>,
    pub labels: Vec<usize>,
    pub start_state: usize,
    pub signals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Chain {
    matcher: Matcher,
    crc: CrcSpec,
    trellis: Trellis,
    encoder: TailBitingEncoder,
    constellation: Constellation,
    alpha: usize,
    frames: usize,
}

impl Chain {
    pub fn new(matcher: Matcher, crc: CrcSpec, code: &ConvCodeSpec) -> Result<Self, ChainError> {
        let alpha = matcher.distribution().bits_per_symbol();
        let word_len = matcher.output_len() * alpha + crc.degree();
        if word_len % code.k0() != 0 {
            return Err(ChainError::Dimension(format!(
                "CRC word of {word_len} bits does not split into {}-bit frames",
                code.k0()
            )));
        }
        let frames = word_len / code.k0();
        let (trellis, ss) = build_trellis(code);
        let encoder = TailBitingEncoder::new(&ss, frames)?;
        let constellation = Constellation::am(code.n0())?;
        Ok(Self {
            matcher,
            crc,
            trellis,
            encoder,
            constellation,
            alpha,
            frames,
        })
    }

    pub fn matcher(&self) -> &Matcher {
        &self.matcher
    }

    pub fn crc(&self) -> &CrcSpec {
        &self.crc
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn message_bits(&self) -> usize {
        self.matcher.input_bits()
    }

    /// Trellis length `T` in frames (= channel symbols).
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Bits per symbol, `k / T`.
    pub fn rate(&self) -> f64 {
        self.message_bits() as f64 / self.frames as f64
    }

    pub fn transmit(&self, msg: &[Bit]) -> Result<Transmission, ChainError> {
        let amplitudes = self.matcher.encode(msg)?;
        let word = self.crc.encode(&amplitudes_to_bits(&amplitudes, self.alpha));
        let frames = word_to_frames(&word, self.crc.degree(), self.trellis.k0());
        let (labels, start_state) = self.encoder.encode(&self.trellis, &frames)?;
        let signals = self.constellation.map(&labels)?;
        Ok(Transmission {
            amplitudes,
            word,
            frames,
            labels,
            start_state,
            signals,
        })
    }

    /// CRC word carried by the systematic bits of a label path.
    pub fn word_of_labels(&self, labels: &[usize]) -> Vec<Bit> {
        let frames: Vec<usize> = labels.iter().map(|l| l >> 1).collect();
        frames_to_word(&frames, self.crc.degree(), self.trellis.k0())
    }

    /// Strips the CRC, undoes the binary conversion and inverts the matcher.
    pub fn invert(&self, labels: &[usize]) -> Result<Vec<Bit>, ChainError> {
        if labels.len() != self.frames {
            return Err(ChainError::Dimension(format!(
                "expected {} labels, got {}",
                self.frames,
                labels.len()
            )));
        }
        let word = self.word_of_labels(labels);
        if !self.crc.check(&word) {
            return Err(ChainError::CrcFailed);
        }
        self.invert_word(&word)
    }

    pub(crate) fn invert_word(&self, word: &[Bit]) -> Result<Vec<Bit>, ChainError> {
        let amplitudes = bits_to_amplitudes(&word[self.crc.degree()..], self.alpha)?;
        Ok(self.matcher.decode(&amplitudes)?)
    }

    /// Per-position signal priors for the decoder metric, built from the
    /// amplitude distribution `amplitudes` (normally the realized `P(A-bar)`).
    pub fn position_priors(
        &self,
        amplitudes: &AmplitudeDistribution,
        mode: PriorMode,
    ) -> Result<Vec<SignalPrior>, ChainError> {
        if amplitudes.bits_per_symbol() != self.trellis.k0() {
            return Err(ChainError::Dimension(
                "shaped priors need one amplitude per trellis frame".into(),
            ));
        }
        let shaped = SignalPrior::shaped(&self.constellation, amplitudes)?;
        let data_frames = self.matcher.output_len();
        Ok((0..self.frames)
            .map(|t| match mode {
                PriorMode::PerPosition if t >= data_frames => SignalPrior::uniform(&self.constellation),
                _ => shaped.clone(),
            })
            .collect())
    }
}

/// Splits a CRC word into encoder frames, message part first.
pub fn word_to_frames(word: &[Bit], crc_degree: usize, k0: usize) -> Vec<usize> {
    let (rem, msg) = word.split_at(crc_degree);
    let stream: Vec<Bit> = msg.iter().chain(rem).copied().collect();
    stream
        .chunks(k0)
        .map(|c| c.iter().fold(0, |acc, &b| (acc << 1) | b as usize))
        .collect()
}

/// Inverse of [`word_to_frames`].
pub fn frames_to_word(frames: &[usize], crc_degree: usize, k0: usize) -> Vec<Bit> {
    let stream: Vec<Bit> = frames
        .iter()
        .flat_map(|&f| (0..k0).rev().map(move |i| ((f >> i) & 1) as Bit))
        .collect();
    let split = stream.len() - crc_degree;
    stream[split..].iter().chain(&stream[..split]).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::ShellMapper;
    use crate::tbcc::shipped_code;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_chain() -> Chain {
        let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
        let m = Matcher::Shell(ShellMapper::new(21, 16, d).unwrap());
        Chain::new(m, CrcSpec::new(2, 0b111).unwrap(), &shipped_code(3).unwrap().spec).unwrap()
    }

    #[test]
    fn frame_layout() {
        // message 1 0 0 1 1 1, remainder 0 1
        let word = vec![0, 1, 1, 0, 0, 1, 1, 1];
        let frames = word_to_frames(&word, 2, 2);
        assert_eq!(frames, vec![0b10, 0b01, 0b11, 0b01]);
        assert_eq!(frames_to_word(&frames, 2, 2), word);
    }

    #[test]
    fn message_frames_equal_amplitudes() {
        let chain = small_chain();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let msg: Vec<Bit> = (0..21).map(|_| rng.random_range(0..2)).collect();
            let tx = chain.transmit(&msg).unwrap();
            assert_eq!(tx.signals.len(), 17);
            for (f, &a) in tx.frames.iter().zip(&tx.amplitudes) {
                assert_eq!(*f, a as usize);
            }
            assert!(chain.crc().check(&tx.word));
            assert_eq!(chain.invert(&tx.labels).unwrap(), msg);
        }
    }

    #[test]
    fn corrupted_parity_fails_crc() {
        let chain = small_chain();
        let msg = vec![1; 21];
        let mut labels = chain.transmit(&msg).unwrap().labels;
        labels[16] ^= 0b010;
        assert_eq!(chain.invert(&labels), Err(ChainError::CrcFailed));
    }

    #[test]
    fn priors_per_position() {
        let chain = small_chain();
        let d = AmplitudeDistribution::normalized(&[0.5742, 0.3188, 0.01642, 0.09048]).unwrap();
        let p = chain.position_priors(&d, PriorMode::PerPosition).unwrap();
        assert_eq!(p.len(), 17);
        assert!((p[0].prob(0) - d.prob(0) / 2.0).abs() < 1e-15);
        assert_eq!(p[16].prob(0), 0.125);
        let h = chain.position_priors(&d, PriorMode::Homogeneous).unwrap();
        assert_eq!(h[16], h[0]);
    }

    #[test]
    fn odd_word_length_rejected() {
        let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
        let m = Matcher::Shell(ShellMapper::new(21, 16, d).unwrap());
        let err = Chain::new(m, CrcSpec::new(3, 0b1011).unwrap(), &shipped_code(3).unwrap().spec);
        assert!(matches!(err, Err(ChainError::Dimension(_))));
    }
}
