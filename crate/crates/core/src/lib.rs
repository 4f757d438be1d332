//! Probabilistic amplitude shaping over CRC-aided trellis coded modulation.
//!
//! The transmit chain is
//!
//! ```text
//! k uniform bits -> distribution matcher -> binary converter -> CRC
//!     -> systematic tail-biting convolutional code -> set-partition 8-AM mapper
//! ```
//!
//! and the receiver runs a serial list Viterbi decoder over the tail-biting
//! trellis, accepting the first candidate whose systematic bits pass the CRC.
//!
//! Besides the chain itself the crate carries exact analysis of the state and
//! label distributions of the shaped encoder ([`analysis`]), a random-coding
//! union bound for the shaped AM channel ([`bounds`]) and a seeded,
//! frame-parallel Monte Carlo harness ([`harness`]).

pub mod analysis;
pub mod bounds;
pub mod chain;
pub mod crc;
pub mod decoder;
pub mod gf2;
pub mod harness;
pub mod modulation;
pub mod shaping;
pub mod tbcc;

/// A single binary digit, stored as `0` or `1`.
pub type Bit = u8;
