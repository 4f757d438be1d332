//! Set-partition labeled equidistant AM, signal priors and the AWGN channel.
//!
//! Points sit at `x_i = 2i - (M - 1)`, `M = 2^n0`. The label of point `i` is
//! built from the bits of `i`:
//!
//! ```text
//! parity     b_0 = i_0
//! systematic b_j = i_j xor i_{j-1}      (j >= 1), then xor a constant
//! ```
//!
//! Fixing the `j` lowest label bits fixes the `j` lowest bits of `i`, so the
//! subsets are binary partitions with distance `2^(j+1)`. Negation complements
//! every bit of `i`, which flips `b_0` and leaves every `b_j` unchanged: the
//! systematic bits pick a magnitude and the parity bit picks the sign. The
//! constant is chosen so that label `0` is `+1`.

use crate::shaping::AmplitudeDistribution;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModulationError {
    #[error("label {0} outside the constellation")]
    InvalidLabel(usize),
    #[error("{0} is not a constellation point")]
    UnknownSignal(f64),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("constellation needs between 2 and 16 label bits, got {0}")]
    UnsupportedSize(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    n0: usize,
    // signal of each label
    signals: Vec<f64>,
    // label of each point index i (x_i = 2i - (M-1))
    labels_by_point: Vec<usize>,
}

impl Constellation {
    pub fn am(n0: usize) -> Result<Self, ModulationError> {
        if !(2..=16).contains(&n0) {
            return Err(ModulationError::UnsupportedSize(n0));
        }
        let m = 1usize << n0;
        let raw = |i: usize| (i & 1) | ((i ^ (i << 1)) & !1 & (m - 1));
        let plus_one = m / 2;
        let offset = raw(plus_one) & !1;
        let labels_by_point: Vec<usize> = (0..m).map(|i| raw(i) ^ offset).collect();
        let mut signals = vec![0.0; m];
        for (i, &l) in labels_by_point.iter().enumerate() {
            signals[l] = (2 * i) as f64 - (m - 1) as f64;
        }
        Ok(Self {
            n0,
            signals,
            labels_by_point,
        })
    }

    pub fn eight_am() -> Self {
        Self::am(3).unwrap()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn size(&self) -> usize {
        self.signals.len()
    }

    /// Signals indexed by label.
    pub fn signals(&self) -> &[f64] {
        &self.signals
    }

    pub fn signal(&self, label: usize) -> f64 {
        self.signals[label]
    }

    /// Magnitude selected by systematic value `a`.
    pub fn magnitude(&self, a: usize) -> f64 {
        self.signals[a << 1].abs()
    }

    pub fn label_of(&self, x: f64) -> Option<usize> {
        let m = self.size() as f64;
        let i = (x + m - 1.0) / 2.0;
        if i.fract() != 0.0 || i < 0.0 || i >= m {
            return None;
        }
        Some(self.labels_by_point[i as usize])
    }

    pub fn map(&self, labels: &[usize]) -> Result<Vec<f64>, ModulationError> {
        labels
            .iter()
            .map(|&l| {
                self.signals
                    .get(l)
                    .copied()
                    .ok_or(ModulationError::InvalidLabel(l))
            })
            .collect()
    }

    pub fn unmap(&self, signals: &[f64]) -> Result<Vec<usize>, ModulationError> {
        signals
            .iter()
            .map(|&x| self.label_of(x).ok_or(ModulationError::UnknownSignal(x)))
            .collect()
    }

    /// Minimum distance inside the subsets obtained by fixing the `j` lowest
    /// label bits, for `j = 0 .. n0-1`.
    pub fn partition_distances(&self) -> Vec<f64> {
        (0..self.n0)
            .map(|j| {
                let mask = (1usize << j) - 1;
                let mut best = f64::INFINITY;
                for a in 0..self.size() {
                    for b in a + 1..self.size() {
                        if a & mask == b & mask {
                            best = best.min((self.signals[a] - self.signals[b]).abs());
                        }
                    }
                }
                best
            })
            .collect()
    }
}

/// Probability of every label (equivalently every signal).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPrior {
    probs: Vec<f64>,
}

impl SignalPrior {
    pub fn new(probs: Vec<f64>) -> Result<Self, ModulationError> {
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(ModulationError::InvalidPrior("entries must lie in [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModulationError::InvalidPrior(format!("sums to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(c: &Constellation) -> Self {
        Self {
            probs: vec![1.0 / c.size() as f64; c.size()],
        }
    }

    /// Amplitude probabilities split evenly between the two signs.
    pub fn shaped(c: &Constellation, dist: &AmplitudeDistribution) -> Result<Self, ModulationError> {
        if dist.alphabet_size() * 2 != c.size() {
            return Err(ModulationError::InvalidPrior(format!(
                "{} amplitudes do not fit {} signals",
                dist.alphabet_size(),
                c.size()
            )));
        }
        Ok(Self {
            probs: (0..c.size()).map(|l| dist.prob(l >> 1) / 2.0).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, label: usize) -> f64 {
        self.probs[label]
    }

    /// `E[X^2]`.
    pub fn energy(&self, c: &Constellation) -> f64 {
        self.probs
            .iter()
            .zip(c.signals())
            .map(|(p, x)| p * x * x)
            .sum()
    }
}

/// `sigma = sqrt(E[X^2] / 10^(snr/10))`: SNR is signal energy over the noise
/// variance of the real channel.
pub fn snr_to_sigma(snr_db: f64, energy: f64) -> f64 {
    (energy / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// The same operating point expressed as `Es/N0` with `N0 = 2 sigma^2`.
pub fn snr_to_es_n0_db(snr_db: f64) -> f64 {
    snr_db - 10.0 * 2f64.log10()
}

/// Adds i.i.d. `N(0, sigma^2)` noise.
pub fn awgn<R: Rng + ?Sized>(x: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    x.iter().map(|&xi| xi + normal.sample(rng)).collect()
}
