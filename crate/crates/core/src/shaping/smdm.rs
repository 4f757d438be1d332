//! Shell-mapping distribution matcher.
//!
//! Every symbol gets an integer weight `W(a) = round(scale * -log2 P(a))` and
//! a sequence weighs the sum of its symbol weights. The codebook is the first
//! `2^k` sequences ordered by total weight, ties broken lexicographically with
//! symbol `0` smallest. Ranking and unranking walk a table of exact-weight
//! suffix counts, so no sequence list is ever materialized.

use super::{pow2, AmplitudeDistribution, DistributionMatcher, ShapingError};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Default weight quantization, `2^16` steps per bit.
pub const DEFAULT_WEIGHT_SCALE: u64 = 1 << 16;

/// Number of suffixes of one length, grouped by exact total weight.
#[derive(Debug, Clone, Default)]
struct ShellTable {
    weights: Vec<u64>,
    counts: Vec<BigUint>,
}

impl ShellTable {
    fn get(&self, weight: u64) -> Option<&BigUint> {
        self.weights
            .binary_search(&weight)
            .ok()
            .map(|i| &self.counts[i])
    }

    fn count_or_zero(&self, weight: u64) -> BigUint {
        self.get(weight).cloned().unwrap_or_default()
    }

    fn extend(&self, symbol_weights: &[u64]) -> ShellTable {
        let mut next: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (w, c) in self.weights.iter().zip(&self.counts) {
            for sw in symbol_weights {
                *next.entry(w + sw).or_default() += c;
            }
        }
        let (weights, counts) = next.into_iter().unzip();
        ShellTable { weights, counts }
    }
}

/// Where the codebook ends inside the weight-ordered list of all sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellBoundary {
    /// Total weight of the last (possibly partial) shell in the codebook.
    pub weight: u64,
    /// Number of sequences with weight strictly below `weight`.
    pub below: BigUint,
    /// Number of sequences taken from the boundary shell.
    pub partial: BigUint,
}

#[derive(Debug, Clone)]
pub struct ShellMapper {
    k: usize,
    n: usize,
    dist: AmplitudeDistribution,
    weight_scale: u64,
    weights: Vec<u64>,
    // tables[r] counts suffixes of length r.
    tables: Vec<ShellTable>,
    // offsets[s]: sequences lighter than shell s of tables[n], for s <= boundary_shell.
    offsets: Vec<BigUint>,
    boundary_shell: usize,
    boundary: ShellBoundary,
}

impl ShellMapper {
    pub fn new(k: usize, n: usize, dist: AmplitudeDistribution) -> Result<Self, ShapingError> {
        Self::with_weight_scale(k, n, dist, DEFAULT_WEIGHT_SCALE)
    }

    pub fn with_weight_scale(
        k: usize,
        n: usize,
        dist: AmplitudeDistribution,
        weight_scale: u64,
    ) -> Result<Self, ShapingError> {
        if n == 0 {
            return Err(ShapingError::InvalidParameters("n must be positive".into()));
        }
        if weight_scale == 0 {
            return Err(ShapingError::InvalidParameters(
                "weight scale must be positive".into(),
            ));
        }
        if dist.pmf().iter().any(|&p| p <= 0.0) {
            return Err(ShapingError::InvalidDistribution(
                "shell mapping needs every symbol probability to be positive".into(),
            ));
        }
        let q = dist.alphabet_size();
        if (k as f64) > n as f64 * (q as f64).log2() {
            return Err(ShapingError::InvalidParameters(format!(
                "2^{k} exceeds the {q}^{n} available sequences"
            )));
        }
        let weights: Vec<u64> = (0..q)
            .map(|a| (weight_scale as f64 * dist.self_information(a)).round() as u64)
            .collect();

        let mut tables = Vec::with_capacity(n + 1);
        tables.push(ShellTable {
            weights: vec![0],
            counts: vec![BigUint::from(1u32)],
        });
        for r in 0..n {
            let next = tables[r].extend(&weights);
            tables.push(next);
        }

        let size = pow2(k);
        let full = &tables[n];
        let mut offsets = Vec::new();
        let mut acc = BigUint::zero();
        let mut boundary_shell = None;
        for (s, c) in full.counts.iter().enumerate() {
            offsets.push(acc.clone());
            acc += c;
            if acc >= size {
                boundary_shell = Some(s);
                break;
            }
        }
        let boundary_shell = boundary_shell.ok_or_else(|| {
            ShapingError::InvalidParameters("codebook larger than the sequence space".into())
        })?;
        let below = offsets[boundary_shell].clone();
        let boundary = ShellBoundary {
            weight: full.weights[boundary_shell],
            partial: &size - &below,
            below,
        };

        Ok(Self {
            k,
            n,
            dist,
            weight_scale,
            weights,
            tables,
            offsets,
            boundary_shell,
            boundary,
        })
    }

    /// Integer symbol weights `W(a)`.
    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn weight_scale(&self) -> u64 {
        self.weight_scale
    }

    pub fn boundary(&self) -> &ShellBoundary {
        &self.boundary
    }

    pub fn codebook_size(&self) -> BigUint {
        pow2(self.k)
    }

    /// Number of length-`r` sequences with total weight exactly `weight`.
    pub fn shell_count(&self, r: usize, weight: u64) -> BigUint {
        self.tables[r].count_or_zero(weight)
    }

    /// Sum of the shell counts over all weights for length `r`; equals `|A|^r`.
    pub fn shell_total(&self, r: usize) -> BigUint {
        self.tables[r].counts.iter().sum()
    }

    /// Total weight of a sequence.
    pub fn sequence_weight(&self, amplitudes: &[u8]) -> u64 {
        amplitudes.iter().map(|&a| self.weights[a as usize]).sum()
    }

    fn suffix_count(&self, r: usize, weight: u64, symbol: usize) -> BigUint {
        match weight.checked_sub(self.weights[symbol]) {
            Some(rest) => self.tables[r].count_or_zero(rest),
            None => BigUint::zero(),
        }
    }

    /// Average symbol distribution over the codebook, `P(A-bar)`.
    ///
    /// Full shells are permutation invariant, so each contributes
    /// `n * count(n-1, w - W(a))` occurrences of `a`. The partial shell is
    /// split into complete subtrees along the unranking walk of its size.
    pub fn realized_pmf(&self) -> Vec<f64> {
        let q = self.weights.len();
        let n = self.n;
        let mut occ = vec![BigUint::zero(); q];
        let full = &self.tables[n];
        for s in 0..self.boundary_shell {
            let w = full.weights[s];
            for (a, o) in occ.iter_mut().enumerate() {
                *o += self.suffix_count(n - 1, w, a) * n;
            }
        }

        let mut remaining = self.boundary.partial.clone();
        let mut w = self.boundary.weight;
        let mut prefix_occ = vec![0usize; q];
        for pos in 0..n {
            if remaining.is_zero() {
                break;
            }
            let rem = n - pos - 1;
            for a in 0..q {
                let c = self.suffix_count(rem, w, a);
                if c.is_zero() {
                    continue;
                }
                if remaining < c {
                    prefix_occ[a] += 1;
                    w -= self.weights[a];
                    break;
                }
                // Whole subtree below prefix + a.
                let sub_w = w - self.weights[a];
                for (b, o) in occ.iter_mut().enumerate() {
                    let in_prefix = prefix_occ[b] + usize::from(b == a);
                    *o += &c * in_prefix;
                    if rem > 0 {
                        *o += self.suffix_count(rem - 1, sub_w, b) * rem;
                    }
                }
                remaining -= c;
            }
        }

        let total = (pow2(self.k) * n).to_f64().unwrap();
        occ.iter().map(|o| o.to_f64().unwrap() / total).collect()
    }
}

impl DistributionMatcher for ShellMapper {
    fn input_bits(&self) -> usize {
        self.k
    }

    fn output_len(&self) -> usize {
        self.n
    }

    fn distribution(&self) -> &AmplitudeDistribution {
        &self.dist
    }

    fn encode_index(&self, index: &BigUint) -> Result<Vec<u8>, ShapingError> {
        if index.bits() > self.k as u64 {
            return Err(ShapingError::IndexOutOfRange);
        }
        let shell = self.offsets.partition_point(|o| o <= index) - 1;
        let mut rank = index - &self.offsets[shell];
        let mut w = self.tables[self.n].weights[shell];
        let q = self.weights.len();
        let mut out = Vec::with_capacity(self.n);
        for pos in 0..self.n {
            let rem = self.n - pos - 1;
            let mut chosen = None;
            for a in 0..q {
                let c = self.suffix_count(rem, w, a);
                if rank < c {
                    chosen = Some(a);
                    break;
                }
                rank -= c;
            }
            let a = chosen.expect("shell table inconsistent with offsets");
            w -= self.weights[a];
            out.push(a as u8);
        }
        debug_assert_eq!(w, 0);
        Ok(out)
    }

    fn decode_index(&self, amplitudes: &[u8]) -> Result<BigUint, ShapingError> {
        if amplitudes.len() != self.n {
            return Err(ShapingError::LengthMismatch {
                expected: self.n,
                got: amplitudes.len(),
            });
        }
        let q = self.weights.len();
        if let Some(&bad) = amplitudes.iter().find(|&&a| a as usize >= q) {
            return Err(ShapingError::InvalidSymbol(bad));
        }
        let total = self.sequence_weight(amplitudes);
        if total > self.boundary.weight {
            return Err(ShapingError::NotInCodebook);
        }
        let shell = self.tables[self.n]
            .weights
            .binary_search(&total)
            .expect("every sequence weight has a shell");
        let mut rank = self.offsets[shell].clone();
        let mut w = total;
        for (pos, &a) in amplitudes.iter().enumerate() {
            let rem = self.n - pos - 1;
            for b in 0..a as usize {
                rank += self.suffix_count(rem, w, b);
            }
            w -= self.weights[a as usize];
        }
        if rank >= pow2(self.k) {
            return Err(ShapingError::NotInCodebook);
        }
        Ok(rank)
    }

    /// Evaluated from the shell totals with the quantized weights standing in
    /// for `-log2 P`; the error is below `2^-17` bits per symbol at the
    /// default scale.
    fn normalized_kl(&self) -> f64 {
        let full = &self.tables[self.n];
        let mut weight_sum = BigUint::zero();
        for s in 0..self.boundary_shell {
            weight_sum += &full.counts[s] * full.weights[s];
        }
        weight_sum += &self.boundary.partial * self.boundary.weight;
        let mean_weight = weight_sum.to_f64().unwrap() / pow2(self.k).to_f64().unwrap();
        (mean_weight / self.weight_scale as f64 - self.k as f64) / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::{bits_to_index, index_to_bits};
    use proptest::prelude::*;

    fn toy() -> ShellMapper {
        let d = AmplitudeDistribution::new(vec![0.8, 0.2]).unwrap();
        ShellMapper::new(2, 3, d).unwrap()
    }

    /// All sequences sorted by (quantized weight, lexicographic order).
    fn brute_force_order(m: &ShellMapper) -> Vec<Vec<u8>> {
        let q = m.weights().len();
        let n = m.output_len();
        let mut seqs: Vec<Vec<u8>> = (0..q.pow(n as u32))
            .map(|mut i| {
                let mut s = vec![0u8; n];
                for p in (0..n).rev() {
                    s[p] = (i % q) as u8;
                    i /= q;
                }
                s
            })
            .collect();
        seqs.sort_by_key(|s| (m.sequence_weight(s), s.clone()));
        seqs
    }

    #[test]
    fn toy_codebook() {
        let m = toy();
        let expect = [[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]];
        for (i, e) in expect.iter().enumerate() {
            let seq = m.encode_index(&BigUint::from(i)).unwrap();
            assert_eq!(seq, e.to_vec());
            assert_eq!(m.decode_index(&seq).unwrap(), BigUint::from(i));
        }
        assert_eq!(m.decode(&[0, 0, 0]).unwrap(), vec![0, 0]);
        assert_eq!(m.decode_index(&[1, 1, 0]), Err(ShapingError::NotInCodebook));
        assert_eq!(m.encode_index(&BigUint::from(4u32)), Err(ShapingError::IndexOutOfRange));
    }

    #[test]
    fn toy_kl_matches_direct_sum() {
        // Direct sum over the four codewords with exact logs.
        let ic0 = -(0.8f64).log2();
        let ic1 = -(0.2f64).log2();
        let sum = 3.0 * ic0 + 3.0 * (2.0 * ic0 + ic1);
        let direct = sum / (3.0 * 4.0) - 2.0 / 3.0;
        assert!((direct - 0.1553).abs() < 1e-4);
        assert!((toy().normalized_kl() - direct).abs() < 1e-5);
    }

    #[test]
    fn matches_brute_force_sort() {
        let cases: Vec<(Vec<f64>, usize, usize)> = vec![
            (vec![0.587, 0.312, 0.014, 0.085], 4, 5),
            (vec![0.587, 0.312, 0.014, 0.085], 6, 9),
            (vec![0.25; 4], 3, 6),
            (vec![0.4, 0.3, 0.2, 0.1], 5, 7),
            (vec![0.7, 0.3], 6, 3),
        ];
        for (pmf, n, k) in cases {
            let d = AmplitudeDistribution::normalized(&pmf).unwrap();
            let m = ShellMapper::new(k, n, d).unwrap();
            let order = brute_force_order(&m);
            for (i, expect) in order.iter().take(1 << k).enumerate() {
                let idx = BigUint::from(i);
                assert_eq!(&m.encode_index(&idx).unwrap(), expect);
                assert_eq!(m.decode_index(expect).unwrap(), idx);
            }
            for outside in order.iter().skip(1 << k) {
                assert_eq!(m.decode_index(outside), Err(ShapingError::NotInCodebook));
            }
        }
    }

    #[test]
    fn realized_pmf_matches_enumeration() {
        for (k, n) in [(9, 6), (12, 8), (16, 12), (5, 4)] {
            let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
            let m = ShellMapper::new(k, n, d).unwrap();
            let mut occ = [0f64; 4];
            for i in 0..(1u32 << k) {
                for a in m.encode_index(&BigUint::from(i)).unwrap() {
                    occ[a as usize] += 1.0;
                }
            }
            let total = (n as f64) * f64::from(1u32 << k);
            let realized = m.realized_pmf();
            for a in 0..4 {
                assert!((realized[a] - occ[a] / total).abs() < 1e-12, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn shell_totals() {
        let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
        let m = ShellMapper::new(20, 16, d).unwrap();
        for r in 0..=16 {
            assert_eq!(m.shell_total(r), BigUint::from(4u32).pow(r as u32));
        }
    }

    #[test]
    fn rejects_oversized_codebook() {
        let d = AmplitudeDistribution::uniform(4).unwrap();
        assert!(ShellMapper::new(7, 3, d.clone()).is_err());
        assert!(ShellMapper::new(6, 3, d).is_ok());
    }

    #[test]
    fn uniform_full_codebook_has_zero_kl() {
        let d = AmplitudeDistribution::uniform(4).unwrap();
        let m = ShellMapper::new(10, 5, d).unwrap();
        assert!(m.normalized_kl().abs() < 1e-12);
    }

    #[test]
    fn heavy_sequence_not_in_codebook() {
        let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
        let m = ShellMapper::new(21, 16, d).unwrap();
        let heavy = vec![2u8; 16];
        assert!(m.sequence_weight(&heavy) > m.boundary().weight);
        assert_eq!(m.decode_index(&heavy), Err(ShapingError::NotInCodebook));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn random_index_roundtrip(bits in proptest::collection::vec(0u8..2, 21)) {
            let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
            let m = ShellMapper::new(21, 16, d).unwrap();
            let seq = m.encode(&bits).unwrap();
            prop_assert!(m.sequence_weight(&seq) <= m.boundary().weight);
            prop_assert_eq!(m.decode(&seq).unwrap(), bits.clone());
            prop_assert_eq!(index_to_bits(&bits_to_index(&bits), 21), bits);
        }
    }
}
