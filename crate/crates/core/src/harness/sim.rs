//! Seeded frame error rate simulation.
//!
//! Frame `f` at SNR index `s` draws its message and noise from a ChaCha8
//! generator keyed by `(master_seed, s)` on stream `f`. Frames are processed
//! in fixed rounds, in parallel within a round, and tallied in frame order, so
//! a record depends only on the configuration and the master seed: the
//! worker count changes the wall-clock time and nothing else. Reusing a seed
//! across configurations gives common random numbers.

use super::{HarnessError, Stopping, System, SystemConfig};
use crate::crc::CrcSpec;
use crate::decoder::{DecodeError, Decoded};
use crate::modulation::{awgn, snr_to_es_n0_db};
use crate::Bit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// How a single frame ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOutcome {
    Success { rank: usize },
    /// A wrong codeword passed the CRC.
    Undetected { rank: usize },
    ListExhausted,
    NotInCodebook,
}

impl FrameOutcome {
    pub fn is_error(&self) -> bool {
        !matches!(self, FrameOutcome::Success { .. })
    }
}

/// Classifies a decoder result against the transmitted message.
pub fn classify(result: &Result<Decoded, DecodeError>, sent: &[Bit]) -> FrameOutcome {
    match result {
        Ok(d) if d.message == sent => FrameOutcome::Success {
            rank: d.candidate.rank,
        },
        Ok(d) => FrameOutcome::Undetected {
            rank: d.candidate.rank,
        },
        Err(DecodeError::NotInCodebook { .. }) => FrameOutcome::NotInCodebook,
        Err(_) => FrameOutcome::ListExhausted,
    }
}

/// Generator for one frame.
pub fn frame_rng(master_seed: u64, snr_index: u64, frame: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&snr_index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(frame);
    rng
}

pub fn random_message<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<Bit> {
    (0..k).map(|_| rng.random_range(0..2)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    pub snr_db: f64,
    /// Same point as `Es/N0` with `N0 = 2 sigma^2`.
    pub es_n0_db: f64,
    pub sigma: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub undetected_errors: usize,
    pub list_exhausted: usize,
    pub not_in_codebook: usize,
    /// Mean list position of the CRC-passing candidate, over frames that
    /// found one.
    pub avg_list_rank: f64,
    pub fer: f64,
    pub stderr: f64,
    pub seed: u64,
    pub snr_index: u64,
    pub wallclock_s: f64,
}

impl FerRecord {
    pub const CSV_HEADER: &'static str = "snr_db,es_n0_db,sigma,frames,frame_errors,undetected_errors,list_exhausted,not_in_codebook,avg_list_rank,fer,stderr,seed,snr_index,wallclock_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.es_n0_db,
            self.sigma,
            self.frames,
            self.frame_errors,
            self.undetected_errors,
            self.list_exhausted,
            self.not_in_codebook,
            self.avg_list_rank,
            self.fer,
            self.stderr,
            self.seed,
            self.snr_index,
            self.wallclock_s
        )
    }

    /// Wilson score interval for the FER at normal quantile `z`.
    pub fn confidence_interval(&self, z: f64) -> (f64, f64) {
        if self.frames == 0 {
            return (0.0, 1.0);
        }
        let n = self.frames as f64;
        let p = self.fer;
        let denom = 1.0 + z * z / n;
        let center = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        ((center - half).max(0.0), (center + half).min(1.0))
    }

    /// The record with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wallclock_s: 0.0,
            ..self.clone()
        }
    }
}

/// Runs one SNR point until `min_errors` frame errors or `max_frames` frames.
pub fn simulate_fer(
    system: &System,
    snr_db: f64,
    snr_index: u64,
    stopping: &Stopping,
    master_seed: u64,
    workers: usize,
) -> Result<FerRecord, HarnessError> {
    let started = Instant::now();
    let sigma = system.sigma(snr_db);
    let decoder = system.decoder(sigma)?;
    let k = system.message_bits();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let round = stopping.round.max(1);

    let run_frame = |f: u64| -> Result<FrameOutcome, HarnessError> {
        let mut rng = frame_rng(master_seed, snr_index, f);
        let msg = random_message(&mut rng, k);
        let tx = system.chain.transmit(&msg)?;
        let y = awgn(&tx.signals, sigma, &mut rng);
        Ok(classify(&decoder.decode(&y), &msg))
    };

    let mut frames = 0usize;
    let (mut undetected, mut exhausted, mut outside) = (0usize, 0usize, 0usize);
    let (mut rank_sum, mut ranked) = (0usize, 0usize);
    while frames < stopping.max_frames && undetected + exhausted + outside < stopping.min_errors {
        let count = round.min(stopping.max_frames - frames) as u64;
        let first = frames as u64;
        let outcomes: Vec<Result<FrameOutcome, HarnessError>> =
            pool.install(|| (first..first + count).into_par_iter().map(run_frame).collect());
        for outcome in outcomes {
            match outcome? {
                FrameOutcome::Success { rank } => {
                    rank_sum += rank;
                    ranked += 1;
                }
                FrameOutcome::Undetected { rank } => {
                    undetected += 1;
                    rank_sum += rank;
                    ranked += 1;
                }
                FrameOutcome::ListExhausted => exhausted += 1,
                FrameOutcome::NotInCodebook => outside += 1,
            }
            frames += 1;
        }
    }
    let frame_errors = undetected + exhausted + outside;
    let fer = if frames > 0 { frame_errors as f64 / frames as f64 } else { 0.0 };
    Ok(FerRecord {
        snr_db,
        es_n0_db: snr_to_es_n0_db(snr_db),
        sigma,
        frames,
        frame_errors,
        undetected_errors: undetected,
        list_exhausted: exhausted,
        not_in_codebook: outside,
        avg_list_rank: if ranked > 0 { rank_sum as f64 / ranked as f64 } else { 0.0 },
        fer,
        stderr: if frames > 0 { (fer * (1.0 - fer) / frames as f64).sqrt() } else { 0.0 },
        seed: master_seed,
        snr_index,
        wallclock_s: started.elapsed().as_secs_f64(),
    })
}

/// One polynomial of a CRC search with its measured FER.
#[derive(Debug, Clone, PartialEq)]
pub struct CrcCandidate {
    pub crc: CrcSpec,
    pub record: FerRecord,
}

/// Simulates every degree-`degree` polynomial with `p_0 = 1` on the same
/// `frames` messages and noise, best first (ties by coefficient value).
pub fn crc_search(
    config: &SystemConfig,
    degree: usize,
    snr_db: f64,
    frames: usize,
) -> Result<Vec<CrcCandidate>, HarnessError> {
    let stopping = Stopping {
        min_errors: usize::MAX,
        max_frames: frames,
        round: config.stopping.round,
    };
    let mut out = Vec::new();
    for crc in CrcSpec::enumerate(degree) {
        let mut cfg = config.clone();
        cfg.crc.degree = degree;
        cfg.crc.coefficients = crc.to_hex();
        let system = cfg.build()?;
        let record = simulate_fer(&system, snr_db, 0, &stopping, config.master_seed, config.workers)?;
        out.push(CrcCandidate { crc, record });
    }
    out.sort_by(|a, b| {
        a.record
            .frame_errors
            .cmp(&b.record.frame_errors)
            .then(a.crc.coefficients().cmp(&b.crc.coefficients()))
    });
    Ok(out)
}
