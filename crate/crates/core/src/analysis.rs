//! Exact distributions of the shaped encoder: CRC parity bits, trellis
//! states and output labels.
//!
//! With input frames drawn i.i.d. from `P_U`, the state distribution evolves
//! as `p_t = C p_{t-1}` where `C[to][from]` sums `P_U(u)` over edges
//! `from -> to`, so every column of `C` sums to one. The label distribution at
//! time `t` is `q_t = D p_t` with `D[l][v] = P_U(l >> 1)` whenever `l` leaves
//! `v`.

use crate::crc::CrcSpec;
use crate::modulation::Constellation;
use crate::shaping::AmplitudeDistribution;
use crate::tbcc::Trellis;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("frame PMF has {got} entries, trellis has {expected} inputs")]
    FrameCount { expected: usize, got: usize },
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),
}

fn check_pmf(p: &[f64]) -> Result<(), AnalysisError> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(AnalysisError::InvalidPmf("entries must lie in [0, 1]".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(AnalysisError::InvalidPmf(format!("sums to {total}")));
    }
    Ok(())
}

/// Distribution of the encoder state at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePmf {
    p: DVector<f64>,
}

impl StatePmf {
    pub fn new(p: Vec<f64>) -> Result<Self, AnalysisError> {
        check_pmf(&p)?;
        Ok(Self {
            p: DVector::from_vec(p),
        })
    }

    pub fn point_mass(states: usize, v: usize) -> Self {
        let mut p = DVector::zeros(states);
        p[v] = 1.0;
        Self { p }
    }

    pub fn uniform(states: usize) -> Self {
        Self {
            p: DVector::from_element(states, 1.0 / states as f64),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        self.p.as_slice()
    }

    /// `max_v |p(v) - 1/|V||`.
    pub fn distance_to_uniform(&self) -> f64 {
        let u = 1.0 / self.p.len() as f64;
        self.p.iter().map(|x| (x - u).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct TransitionMatrices {
    frame_pmf: Vec<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl TransitionMatrices {
    pub fn new(trellis: &Trellis, frame_pmf: &[f64]) -> Result<Self, AnalysisError> {
        if frame_pmf.len() != trellis.num_inputs() {
            return Err(AnalysisError::FrameCount {
                expected: trellis.num_inputs(),
                got: frame_pmf.len(),
            });
        }
        check_pmf(frame_pmf)?;
        let n = trellis.num_states();
        let mut c = DMatrix::zeros(n, n);
        let mut d = DMatrix::zeros(trellis.num_labels(), n);
        for e in trellis.edges() {
            let p = frame_pmf[e.input];
            c[(e.to, e.from)] += p;
            d[(e.label, e.from)] += p;
        }
        Ok(Self {
            frame_pmf: frame_pmf.to_vec(),
            c,
            d,
        })
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn frame_pmf(&self) -> &[f64] {
        &self.frame_pmf
    }

    /// Largest deviation of a column sum of `C` from one.
    pub fn column_sum_error(&self) -> f64 {
        self.c
            .column_iter()
            .map(|col| (col.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every row of `D` has exactly `|V|/2` nonzero entries, all
    /// equal to `P_U` of the row's systematic bits.
    pub fn d_rows_regular(&self) -> bool {
        let half = self.d.ncols() / 2;
        self.d.row_iter().enumerate().all(|(l, row)| {
            let target = self.frame_pmf[l >> 1];
            let nonzero: Vec<f64> = row.iter().copied().filter(|&x| x != 0.0).collect();
            (target == 0.0 || nonzero.len() == half) && nonzero.iter().all(|&x| x == target)
        })
    }

    /// Eigenvalue magnitudes of `C`, largest first.
    pub fn eigenvalue_magnitudes(&self) -> Vec<f64> {
        let mut mags: Vec<f64> = self
            .c
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        mags
    }

    /// `C^steps p0`.
    pub fn evolve(&self, p0: &StatePmf, steps: usize) -> StatePmf {
        let mut p = p0.p.clone();
        for _ in 0..steps {
            p = &self.c * p;
        }
        StatePmf { p }
    }

    /// Distances to uniform of `p_0, p_1, ..., p_steps`.
    pub fn trajectory(&self, p0: &StatePmf, steps: usize) -> Vec<f64> {
        let mut p = p0.clone();
        let mut out = vec![p.distance_to_uniform()];
        for _ in 0..steps {
            p = StatePmf { p: &self.c * &p.p };
            out.push(p.distance_to_uniform());
        }
        out
    }

    /// `q = D p`, indexed by label.
    pub fn output_label_pmf(&self, p: &StatePmf) -> Vec<f64> {
        (&self.d * &p.p).iter().copied().collect()
    }
}

/// Frame distribution when each frame carries one amplitude.
pub fn frame_pmf_from_amplitudes(dist: &AmplitudeDistribution) -> Vec<f64> {
    dist.pmf().to_vec()
}

/// Signal distribution `(x, P(x))` sorted by `x`, from a label distribution.
pub fn signal_pmf(label_pmf: &[f64], constellation: &Constellation) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = label_pmf
        .iter()
        .enumerate()
        .map(|(l, &p)| (constellation.signal(l), p))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Largest `|P(x) - P(-x)|` of a signal distribution.
pub fn sign_asymmetry(signal_pmf: &[(f64, f64)]) -> f64 {
    let n = signal_pmf.len();
    (0..n / 2)
        .map(|i| (signal_pmf[i].1 - signal_pmf[n - 1 - i].1).abs())
        .fold(0.0, f64::max)
}

/// Distribution of every CRC parity bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CrcBitReport {
    /// `P(U_i = 0)` for each parity position `i`.
    pub p_zero: Vec<f64>,
    /// Number of even-indexed message bits feeding parity `i`.
    pub j_even: Vec<usize>,
    /// Number of odd-indexed message bits feeding parity `i`.
    pub j_odd: Vec<usize>,
}

impl CrcBitReport {
    pub fn max_bias(&self) -> f64 {
        self.p_zero.iter().map(|p| (p - 0.5).abs()).fold(0.0, f64::max)
    }
}

fn exponents(sets: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    sets.iter()
        .map(|s| {
            let even = s.iter().filter(|&&j| j % 2 == 0).count();
            (even, s.len() - even)
        })
        .unzip()
}

/// Parity-bit distribution for independent message bits with
/// `P(W_j = 1) = bit_one[j]`:
/// `P(U_i = 0) = 1/2 + 1/2 prod_{j in W_i} (1 - 2 P(W_j = 1))`.
pub fn crc_bit_pmf_bitwise(spec: &CrcSpec, bit_one: &[f64]) -> CrcBitReport {
    let sets = spec.parity_sets(bit_one.len());
    let p_zero = sets
        .iter()
        .map(|s| 0.5 + 0.5 * s.iter().map(|&j| 1.0 - 2.0 * bit_one[j]).product::<f64>())
        .collect();
    let (j_even, j_odd) = exponents(&sets);
    CrcBitReport {
        p_zero,
        j_even,
        j_odd,
    }
}

/// Parity-bit distribution for `n_symbols` i.i.d. amplitudes from `dist`
/// written MSB first. Bits of one amplitude are dependent, so the product
/// runs over symbols: each contributes `E[(-1)^(popcount(mask & A))]`, where
/// `mask` selects the bits of that symbol feeding the parity.
pub fn crc_bit_pmf_symbolwise(
    spec: &CrcSpec,
    dist: &AmplitudeDistribution,
    n_symbols: usize,
) -> CrcBitReport {
    let alpha = dist.bits_per_symbol();
    let sets = spec.parity_sets(n_symbols * alpha);
    let p_zero = sets
        .iter()
        .map(|s| {
            let mut masks = vec![0usize; n_symbols];
            for &j in s {
                masks[j / alpha] |= 1 << (alpha - 1 - j % alpha);
            }
            let prod: f64 = masks
                .iter()
                .map(|&mask| {
                    dist.pmf()
                        .iter()
                        .enumerate()
                        .map(|(a, p)| if (mask & a).count_ones() % 2 == 0 { *p } else { -p })
                        .sum::<f64>()
                })
                .product();
            0.5 + 0.5 * prod
        })
        .collect();
    let (j_even, j_odd) = exponents(&sets);
    CrcBitReport {
        p_zero,
        j_even,
        j_odd,
    }
}
