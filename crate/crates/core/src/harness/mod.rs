//! Configuration, Monte Carlo frame error simulation and CRC search.

mod config;
mod sim;

pub use config::{
    CodeConfig, CrcConfig, DecoderSettings, DmConfig, MatcherKind, Stopping, System, SystemConfig,
    EXAMPLE_PMF,
};
pub use sim::{
    classify, crc_search, frame_rng, random_message, simulate_fer, CrcCandidate, FerRecord, FrameOutcome,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Shaping(#[from] crate::shaping::ShapingError),
    #[error(transparent)]
    Crc(#[from] crate::crc::CrcError),
    #[error(transparent)]
    Tbcc(#[from] crate::tbcc::TbccError),
    #[error(transparent)]
    Chain(#[from] crate::chain::ChainError),
    #[error(transparent)]
    Decode(#[from] crate::decoder::DecodeError),
    #[error(transparent)]
    Bounds(#[from] crate::bounds::BoundsError),
}
