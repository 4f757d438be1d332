//! Random-coding union bound for a memoryless AM channel with i.i.d. inputs.
//!
//! ```text
//! rcu = E[ min{1, (M - 1) Pr[ i(Xbar^n; Y^n) >= i(X^n; Y^n) | X^n, Y^n ] } ]
//! ```
//!
//! The inner probability only depends on the per-symbol log-likelihood
//! differences `d_j(xbar) = log2 p(y_j | xbar) - log2 p(y_j | x_j)`, each an
//! atom distribution over the signal set with the input prior as weights.
//! Their sum is computed by convolution on a lattice of step `delta` bits.
//! Every atom is split between its two neighbouring lattice points so that its
//! mean is preserved (the true symbol sits exactly on 0), and lattice mass
//! that can no longer reach 0 with the remaining symbols is dropped. The tail
//! counts lattice points above 0 fully and the point at 0 by half, except for
//! the exact tie `Xbar^n = X^n`, whose mass `prod_j P(x_j)` sits on 0 and is
//! counted fully. The outer expectation is a seeded Monte Carlo average with a
//! relative standard error stopping rule.

use crate::modulation::{Constellation, SignalPrior};
use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("density lattice needs {needed} bins, limit is {limit}")]
    GridOverflow { needed: usize, limit: usize },
    #[error("curve does not bracket the target {target:e}")]
    NotBracketed { target: f64 },
    #[error("invalid bound configuration: {0}")]
    Invalid(String),
}

/// Signals and per-position input priors of the random-coding ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct RcuEnsemble {
    signals: Vec<f64>,
    priors: Vec<Vec<f64>>,
}

impl RcuEnsemble {
    pub fn new(signals: Vec<f64>, priors: Vec<Vec<f64>>) -> Result<Self, BoundsError> {
        if priors.is_empty() {
            return Err(BoundsError::Invalid("blocklength must be positive".into()));
        }
        for p in &priors {
            if p.len() != signals.len() {
                return Err(BoundsError::Invalid("prior length differs from signal count".into()));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 || p.iter().any(|&x| x < 0.0) {
                return Err(BoundsError::Invalid(format!("prior sums to {total}")));
            }
        }
        Ok(Self { signals, priors })
    }

    /// Same prior at all `n` positions.
    pub fn homogeneous(signals: Vec<f64>, prior: Vec<f64>, n: usize) -> Result<Self, BoundsError> {
        Self::new(signals, vec![prior; n])
    }

    pub fn from_constellation(c: &Constellation, priors: &[SignalPrior]) -> Result<Self, BoundsError> {
        Self::new(
            c.signals().to_vec(),
            priors.iter().map(|p| p.probs().to_vec()).collect(),
        )
    }

    pub fn blocklength(&self) -> usize {
        self.priors.len()
    }

    pub fn signals(&self) -> &[f64] {
        &self.signals
    }

    /// `E[X^2]` averaged over positions.
    pub fn energy(&self) -> f64 {
        self.priors
            .iter()
            .map(|p| p.iter().zip(&self.signals).map(|(p, x)| p * x * x).sum::<f64>())
            .sum::<f64>()
            / self.priors.len() as f64
    }
}

/// `i(x; y) = log2 p(y|x) / sum_x' P(x') p(y|x')` for Gaussian noise.
pub fn info_density(x: f64, y: f64, signals: &[f64], prior: &[f64], sigma: f64) -> f64 {
    let s2 = 2.0 * sigma * sigma;
    let own = -(y - x) * (y - x) / s2;
    let exps: Vec<f64> = signals
        .iter()
        .zip(prior)
        .filter(|(_, &p)| p > 0.0)
        .map(|(xs, p)| p.ln() - (y - xs) * (y - xs) / s2)
        .collect();
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
    (own - lse) / LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcuConfig {
    /// Message bits; `M = 2^k`.
    pub k: usize,
    /// Lattice step in bits.
    pub grid_step: f64,
    pub max_bins: usize,
    pub min_samples: usize,
    pub max_samples: usize,
    /// Stop once the standard error is below this fraction of the estimate.
    pub target_rel_stderr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for RcuConfig {
    fn default() -> Self {
        Self {
            k: 87,
            grid_step: 0.02,
            max_bins: 1 << 20,
            min_samples: 2_000,
            max_samples: 200_000,
            target_rel_stderr: 0.05,
            batch: 500,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcuEstimate {
    pub snr_db: f64,
    pub sigma: f64,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Lattice convolution of the per-symbol likelihood-difference atoms.
/// `sent[j]` indexes the transmitted signal at position `j`.
pub fn conditional_tail(
    ensemble: &RcuEnsemble,
    sent: &[usize],
    y: &[f64],
    sigma: f64,
    step: f64,
    max_bins: usize,
) -> Result<f64, BoundsError> {
    let n = ensemble.blocklength();
    let scale = 1.0 / (2.0 * sigma * sigma * LN_2 * step);
    // Atoms in lattice units: (lo, weight at lo, weight at lo + 1).
    let mut atoms: Vec<Vec<(i64, f64, f64)>> = Vec::with_capacity(n);
    let mut reach = vec![0i64; n + 1];
    let mut tie = 1.0;
    for j in 0..n {
        tie *= ensemble.priors[j][sent[j]];
        let x = ensemble.signals[sent[j]];
        let own = (y[j] - x) * (y[j] - x);
        let mut sym = Vec::with_capacity(ensemble.signals.len());
        let mut top = i64::MIN;
        for (xb, &p) in ensemble.signals.iter().zip(&ensemble.priors[j]) {
            if p == 0.0 {
                continue;
            }
            let d = (own - (y[j] - xb) * (y[j] - xb)) * scale;
            let lo = d.floor();
            let w = d - lo;
            let lo = lo as i64;
            sym.push((lo, p * (1.0 - w), p * w));
            top = top.max(if w > 0.0 { lo + 1 } else { lo });
        }
        reach[j] = top;
        atoms.push(sym);
    }
    // reach[j] becomes the largest lattice gain still available after j.
    let mut acc = 0;
    for j in (0..n).rev() {
        let here = reach[j];
        reach[j] = acc;
        acc += here;
    }

    // mass[i] sits at lattice point offset + i.
    let mut offset = 0i64;
    let mut mass = vec![1.0f64];
    let mut next = Vec::new();
    for j in 0..n {
        let hi_max = atoms[j].iter().map(|a| a.0 + 1).max().unwrap();
        let lo_min = atoms[j].iter().map(|a| a.0).min().unwrap();
        // Points below -reach[j] can no longer climb back to 0.
        let start = (offset + lo_min).max(-reach[j]);
        let end = offset + hi_max + mass.len() as i64;
        if start >= end {
            return Ok(0.0);
        }
        let len = (end - start) as usize;
        if len > max_bins {
            return Err(BoundsError::GridOverflow {
                needed: len,
                limit: max_bins,
            });
        }
        next.clear();
        next.resize(len, 0.0);
        for &(lo, w0, w1) in &atoms[j] {
            for (shift, w) in [(lo, w0), (lo + 1, w1)] {
                if w == 0.0 {
                    continue;
                }
                // mass[i] lands on offset + shift + i.
                let first = offset + shift - start;
                let skip = (-first).max(0) as usize;
                if skip >= mass.len() {
                    continue;
                }
                let dst = &mut next[(first + skip as i64) as usize..];
                for (d, &m) in dst.iter_mut().zip(&mass[skip..]) {
                    *d += m * w;
                }
            }
        }
        let first_nonzero = next.iter().position(|&m| m != 0.0);
        let Some(first_nonzero) = first_nonzero else {
            return Ok(0.0);
        };
        let last_nonzero = next.iter().rposition(|&m| m != 0.0).unwrap();
        mass.clear();
        mass.extend_from_slice(&next[first_nonzero..=last_nonzero]);
        offset = start + first_nonzero as i64;
    }
    let mut tail = 0.5 * tie;
    for (i, &m) in mass.iter().enumerate() {
        let point = offset + i as i64;
        if point > 0 {
            tail += m;
        } else if point == 0 {
            tail += 0.5 * m;
        }
    }
    Ok(tail.min(1.0))
}

/// Draws one `(X^n, Y^n)` pair and returns `min{1, (M-1) tail}`.
fn rcu_sample(
    ensemble: &RcuEnsemble,
    samplers: &[WeightedIndex<f64>],
    noise: &Normal<f64>,
    m_minus_1: f64,
    cfg: &RcuConfig,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64, BoundsError> {
    let sent: Vec<usize> = samplers.iter().map(|w| w.sample(rng)).collect();
    let y: Vec<f64> = sent
        .iter()
        .map(|&i| ensemble.signals[i] + noise.sample(rng))
        .collect();
    let tail = conditional_tail(ensemble, &sent, &y, sigma, cfg.grid_step, cfg.max_bins)?;
    Ok((m_minus_1 * tail).min(1.0))
}

const BATCHES_PER_ROUND: u64 = 4;

/// Monte Carlo estimate of the RCU bound at noise level `sigma`.
///
/// Samples are drawn in batches; batch `b` uses its own generator seeded from
/// `(cfg.seed, b)`, and the stopping rule is checked after every
/// `BATCHES_PER_ROUND` batches, so the result does not depend on the thread
/// count.
pub fn rcu_bound(ensemble: &RcuEnsemble, cfg: &RcuConfig, sigma: f64) -> Result<RcuEstimate, BoundsError> {
    if !(sigma > 0.0) || !(cfg.grid_step > 0.0) || cfg.batch == 0 {
        return Err(BoundsError::Invalid("sigma, grid step and batch must be positive".into()));
    }
    let m_minus_1 = 2f64.powi(cfg.k as i32) - 1.0;
    let energy = ensemble.energy();
    let snr_db = 10.0 * (energy / (sigma * sigma)).log10();
    if m_minus_1 == 0.0 {
        return Ok(RcuEstimate {
            snr_db,
            sigma,
            value: 0.0,
            stderr: 0.0,
            samples: 0,
        });
    }
    let samplers: Vec<WeightedIndex<f64>> = ensemble
        .priors
        .iter()
        .map(|p| WeightedIndex::new(p).map_err(|e| BoundsError::Invalid(e.to_string())))
        .collect::<Result<_, _>>()?;
    let noise = Normal::new(0.0, sigma).unwrap();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut samples = 0usize;
    let mut batch_index = 0u64;
    loop {
        let round: Vec<u64> = (batch_index..batch_index + BATCHES_PER_ROUND).collect();
        batch_index += BATCHES_PER_ROUND;
        let results: Vec<Result<(f64, f64), BoundsError>> = round
            .par_iter()
            .map(|&b| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(b);
                let mut s = 0.0;
                let mut s2 = 0.0;
                for _ in 0..cfg.batch {
                    let v = rcu_sample(ensemble, &samplers, &noise, m_minus_1, cfg, sigma, &mut rng)?;
                    s += v;
                    s2 += v * v;
                }
                Ok((s, s2))
            })
            .collect();
        for r in results {
            let (s, s2) = r?;
            sum += s;
            sum_sq += s2;
            samples += cfg.batch;
        }
        let mean = sum / samples as f64;
        let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
        let stderr = (var / samples as f64).sqrt();
        let converged = samples >= cfg.min_samples && stderr <= cfg.target_rel_stderr * mean;
        if converged || samples >= cfg.max_samples {
            return Ok(RcuEstimate {
                snr_db,
                sigma,
                value: mean,
                stderr,
                samples,
            });
        }
    }
}

/// SNR at which a curve crosses `target`, interpolating `log10(P)` linearly
/// in SNR between the two bracketing points. Points must be sorted by SNR.
pub fn interpolate_snr(curve: &[(f64, f64)], target: f64) -> Result<f64, BoundsError> {
    let lt = target.log10();
    for w in curve.windows(2) {
        let ((s0, p0), (s1, p1)) = (w[0], w[1]);
        if p0 <= 0.0 || p1 <= 0.0 {
            continue;
        }
        let (l0, l1) = (p0.log10(), p1.log10());
        if (l0 - lt) * (l1 - lt) <= 0.0 && l0 != l1 {
            return Ok(s0 + (lt - l0) / (l1 - l0) * (s1 - s0));
        }
        if l0 == lt {
            return Ok(s0);
        }
    }
    Err(BoundsError::NotBracketed { target })
}

/// `SNR_fer - SNR_rcu` at `target`; negative when the measured curve beats
/// the bound.
pub fn rcu_gap(fer_curve: &[(f64, f64)], rcu_curve: &[(f64, f64)], target: f64) -> Result<f64, BoundsError> {
    Ok(interpolate_snr(fer_curve, target)? - interpolate_snr(rcu_curve, target)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn section5_ensemble(n: usize) -> RcuEnsemble {
        let c = Constellation::eight_am();
        let d = crate::shaping::AmplitudeDistribution::normalized(&[0.5742, 0.3188, 0.01642, 0.09048])
            .unwrap();
        let p = SignalPrior::shaped(&c, &d).unwrap();
        RcuEnsemble::homogeneous(c.signals().to_vec(), p.probs().to_vec(), n).unwrap()
    }

    /// Exact `Pr[sum d >= threshold]` by enumerating every competitor sequence.
    fn exact_tail(e: &RcuEnsemble, sent: &[usize], y: &[f64], sigma: f64, threshold: f64) -> f64 {
        let q = e.signals.len();
        let n = sent.len();
        let mut tail = 0.0;
        for idx in 0..q.pow(n as u32) {
            let mut p = 1.0;
            let mut s = 0.0;
            for j in 0..n {
                let b = (idx / q.pow(j as u32)) % q;
                p *= e.priors[j][b];
                let x = e.signals[sent[j]];
                let xb = e.signals[b];
                s += ((y[j] - x).powi(2) - (y[j] - xb).powi(2)) / (2.0 * sigma * sigma * LN_2);
            }
            if s >= threshold {
                tail += p;
            }
        }
        tail
    }

    #[test]
    fn info_density_limits() {
        let c = Constellation::eight_am();
        let prior = SignalPrior::shaped(
            &c,
            &crate::shaping::AmplitudeDistribution::normalized(&[0.5742, 0.3188, 0.01642, 0.09048])
                .unwrap(),
        )
        .unwrap();
        let i = info_density(1.0, 1.5, c.signals(), prior.probs(), 1e4);
        assert!(i.abs() < 1e-6);
        for (x, y) in [(1.0, 1.5), (3.0, -0.2), (7.0, 4.4)] {
            let a = info_density(x, y, c.signals(), prior.probs(), 0.8);
            let b = info_density(-x, -y, c.signals(), prior.probs(), 0.8);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn info_density_spot_value() {
        // Direct evaluation of the definition with plain sums, sigma = 1.
        let c = Constellation::eight_am();
        let d = crate::shaping::AmplitudeDistribution::normalized(&[0.5742, 0.3188, 0.01642, 0.09048])
            .unwrap();
        let prior = SignalPrior::shaped(&c, &d).unwrap();
        let pdf = |y: f64, x: f64| (-(y - x) * (y - x) / 2.0).exp();
        let py: f64 = c.signals().iter().zip(prior.probs()).map(|(x, p)| p * pdf(1.5, *x)).sum();
        let direct = (pdf(1.5, 1.0) / py).log2();
        assert!((info_density(1.0, 1.5, c.signals(), prior.probs(), 1.0) - direct).abs() < 1e-12);
    }

    #[test]
    fn lattice_tail_matches_enumeration() {
        let e = section5_ensemble(3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let sigma = rng.random_range(0.6..2.0);
            let sent: Vec<usize> = (0..3).map(|_| rng.random_range(0..8)).collect();
            let y: Vec<f64> = sent
                .iter()
                .map(|&i| e.signals[i] + sigma * rng.random_range(-2.0..2.0))
                .collect();
            let step = 1e-3;
            // Each atom moves by less than one step, so the lattice sum is
            // within 3 steps of the true sum.
            let upper = exact_tail(&e, &sent, &y, sigma, -3.0 * step);
            let lower = exact_tail(&e, &sent, &y, sigma, 3.0 * step);
            let grid = conditional_tail(&e, &sent, &y, sigma, step, 1 << 22).unwrap();
            assert!(lower - 1e-12 <= grid && grid <= upper + 1e-12, "{lower} {grid} {upper}");
        }
    }

    #[test]
    fn exact_tie_counts_fully() {
        // Competitors other than the sent word are hopeless, so only the tie
        // Xbar = X remains.
        let e = RcuEnsemble::homogeneous(vec![-1.0, 1.0], vec![0.5, 0.5], 2).unwrap();
        let tail = conditional_tail(&e, &[0, 1], &[-1.0, 1.0], 0.1, 0.02, 1 << 20).unwrap();
        assert!((tail - 0.25).abs() < 1e-12, "{tail}");
    }

    #[test]
    fn thread_count_does_not_matter() {
        let e = section5_ensemble(8);
        let cfg = RcuConfig {
            k: 10,
            min_samples: 500,
            max_samples: 20_000,
            batch: 100,
            target_rel_stderr: 0.03,
            ..RcuConfig::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| rcu_bound(&e, &cfg, 1.2).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn homogeneous_equals_per_position_with_shared_prior() {
        let homo = section5_ensemble(6);
        let per = RcuEnsemble::new(homo.signals.clone(), vec![homo.priors[0].clone(); 6]).unwrap();
        let cfg = RcuConfig {
            k: 8,
            min_samples: 1000,
            max_samples: 1000,
            ..RcuConfig::default()
        };
        assert_eq!(rcu_bound(&homo, &cfg, 1.1).unwrap(), rcu_bound(&per, &cfg, 1.1).unwrap());
    }

    #[test]
    fn unit_message_set_gives_zero() {
        let e = section5_ensemble(4);
        let cfg = RcuConfig {
            k: 0,
            ..RcuConfig::default()
        };
        assert_eq!(rcu_bound(&e, &cfg, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn grid_overflow_reported() {
        let e = section5_ensemble(8);
        let sent = vec![0; 8];
        let y = vec![3.0; 8];
        let err = conditional_tail(&e, &sent, &y, 1.0, 1e-3, 100).unwrap_err();
        assert!(matches!(err, BoundsError::GridOverflow { .. }));
    }

    #[test]
    fn bound_decreases_with_snr() {
        let e = section5_ensemble(16);
        let cfg = RcuConfig {
            k: 21,
            min_samples: 2000,
            max_samples: 2000,
            ..RcuConfig::default()
        };
        let energy = e.energy();
        let values: Vec<f64> = [4.0, 7.0, 10.0]
            .iter()
            .map(|&snr| rcu_bound(&e, &cfg, crate::modulation::snr_to_sigma(snr, energy)).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let e = section5_ensemble(8);
        let cfg = RcuConfig {
            k: 10,
            min_samples: 1000,
            max_samples: 1000,
            ..RcuConfig::default()
        };
        assert_eq!(rcu_bound(&e, &cfg, 1.2).unwrap(), rcu_bound(&e, &cfg, 1.2).unwrap());
    }

    #[test]
    fn gap_interpolation() {
        let bound = vec![(0.0, 1e-1), (1.0, 1e-2), (2.0, 1e-3)];
        assert!(rcu_gap(&bound, &bound, 1e-2).unwrap().abs() < 1e-12);
        let shifted: Vec<(f64, f64)> = bound.iter().map(|&(s, p)| (s + 0.3, p)).collect();
        assert!((rcu_gap(&shifted, &bound, 3e-2).unwrap() - 0.3).abs() < 1e-12);
        assert!((interpolate_snr(&bound, 10f64.powf(-1.5)).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(
            interpolate_snr(&bound, 1e-5),
            Err(BoundsError::NotBracketed { target: 1e-5 })
        );
    }
}
