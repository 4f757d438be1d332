//! Constant-composition distribution matcher with exact multinomial ranking.

use super::{pow2, AmplitudeDistribution, DistributionMatcher, ShapingError};
use num_bigint::BigUint;
use num_traits::{One, Zero};

#[derive(Debug, Clone)]
pub struct CcdmMapper {
    k: usize,
    n: usize,
    composition: Vec<usize>,
    dist: AmplitudeDistribution,
    multinomial: BigUint,
}

impl CcdmMapper {
    /// Builds the matcher for `n` symbols, quantizing `n * P(a)` to integers by
    /// largest-remainder rounding. `k` is the largest width that fits in the
    /// composition class.
    pub fn new(n: usize, dist: AmplitudeDistribution) -> Result<Self, ShapingError> {
        let composition = largest_remainder_composition(n, dist.pmf());
        Self::with_composition(composition, dist)
    }

    pub fn with_composition(
        composition: Vec<usize>,
        dist: AmplitudeDistribution,
    ) -> Result<Self, ShapingError> {
        if composition.len() != dist.alphabet_size() {
            return Err(ShapingError::InvalidParameters(
                "composition length differs from alphabet size".into(),
            ));
        }
        let n: usize = composition.iter().sum();
        if n == 0 {
            return Err(ShapingError::InvalidParameters("empty composition".into()));
        }
        let multinomial = multinomial(&composition);
        let k = (multinomial.bits() - 1) as usize;
        Ok(Self {
            k,
            n,
            composition,
            dist,
            multinomial,
        })
    }

    pub fn composition(&self) -> &[usize] {
        &self.composition
    }

    /// Size of the full composition class, `n! / prod(n_a!)`.
    pub fn class_size(&self) -> &BigUint {
        &self.multinomial
    }
}

/// `n * pmf` rounded down, with the leftover units handed to the largest
/// fractional parts (lowest symbol first on ties).
pub fn largest_remainder_composition(n: usize, pmf: &[f64]) -> Vec<usize> {
    let scaled: Vec<f64> = pmf.iter().map(|p| p * n as f64).collect();
    let mut comp: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = comp.iter().sum();
    let mut order: Vec<usize> = (0..pmf.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &a in order.iter().take(n.saturating_sub(assigned)) {
        comp[a] += 1;
    }
    comp
}

fn multinomial(composition: &[usize]) -> BigUint {
    // Product of binomials, built incrementally to stay exact.
    let mut result = BigUint::one();
    let mut total = 0usize;
    for &c in composition {
        for i in 1..=c {
            total += 1;
            result *= total;
            result /= i;
        }
    }
    result
}

impl DistributionMatcher for CcdmMapper {
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
        let mut counts = self.composition.clone();
        let mut class = self.multinomial.clone();
        let mut rank = index.clone();
        let mut out = Vec::with_capacity(self.n);
        for remaining in (1..=self.n).rev() {
            for a in 0..counts.len() {
                if counts[a] == 0 {
                    continue;
                }
                let sub = &class * counts[a] / remaining;
                if rank < sub {
                    out.push(a as u8);
                    counts[a] -= 1;
                    class = sub;
                    break;
                }
                rank -= sub;
            }
        }
        Ok(out)
    }

    fn decode_index(&self, amplitudes: &[u8]) -> Result<BigUint, ShapingError> {
        if amplitudes.len() != self.n {
            return Err(ShapingError::LengthMismatch {
                expected: self.n,
                got: amplitudes.len(),
            });
        }
        let mut counts = vec![0usize; self.composition.len()];
        for &a in amplitudes {
            *counts
                .get_mut(a as usize)
                .ok_or(ShapingError::InvalidSymbol(a))? += 1;
        }
        if counts != self.composition {
            return Err(ShapingError::NotInCodebook);
        }
        let mut class = self.multinomial.clone();
        let mut rank = BigUint::zero();
        for (pos, &a) in amplitudes.iter().enumerate() {
            let remaining = self.n - pos;
            for b in 0..a as usize {
                if counts[b] > 0 {
                    rank += &class * counts[b] / remaining;
                }
            }
            class = &class * counts[a as usize] / remaining;
            counts[a as usize] -= 1;
        }
        if rank >= pow2(self.k) {
            return Err(ShapingError::NotInCodebook);
        }
        Ok(rank)
    }

    /// All codewords share one composition, so the divergence is closed form.
    fn normalized_kl(&self) -> f64 {
        let info: f64 = self
            .composition
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(a, &c)| c as f64 * self.dist.self_information(a))
            .sum();
        (info - self.k as f64) / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Permutations of a multiset in lexicographic order.
    fn enumerate(comp: &[usize]) -> Vec<Vec<u8>> {
        fn rec(counts: &mut Vec<usize>, prefix: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for a in 0..counts.len() {
                if counts[a] > 0 {
                    counts[a] -= 1;
                    prefix.push(a as u8);
                    rec(counts, prefix, n, out);
                    prefix.pop();
                    counts[a] += 1;
                }
            }
        }
        let mut out = Vec::new();
        let n = comp.iter().sum();
        rec(&mut comp.to_vec(), &mut Vec::new(), n, &mut out);
        out
    }

    #[test]
    fn small_binary_class() {
        let d = AmplitudeDistribution::new(vec![0.75, 0.25]).unwrap();
        let m = CcdmMapper::with_composition(vec![3, 1], d).unwrap();
        assert_eq!(m.input_bits(), 2);
        assert_eq!(*m.class_size(), BigUint::from(4u32));
        assert_eq!(m.encode_index(&BigUint::zero()).unwrap(), vec![0, 0, 0, 1]);
        assert_eq!(m.encode_index(&BigUint::from(3u32)).unwrap(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn exhaustive_bijection() {
        let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
        for comp in [vec![4, 2, 1, 1], vec![3, 3, 0, 2], vec![5, 1, 1, 1], vec![2, 2, 2, 2]] {
            let m = CcdmMapper::with_composition(comp.clone(), d.clone()).unwrap();
            let all = enumerate(&comp);
            assert_eq!(BigUint::from(all.len()), *m.class_size());
            for (i, seq) in all.iter().enumerate() {
                if i < 1 << m.input_bits() {
                    assert_eq!(&m.encode_index(&BigUint::from(i)).unwrap(), seq);
                    assert_eq!(m.decode_index(seq).unwrap(), BigUint::from(i));
                } else {
                    assert_eq!(m.decode_index(seq), Err(ShapingError::NotInCodebook));
                }
            }
        }
    }

    #[test]
    fn wrong_composition_rejected() {
        let d = AmplitudeDistribution::new(vec![0.75, 0.25]).unwrap();
        let m = CcdmMapper::with_composition(vec![3, 1], d).unwrap();
        assert_eq!(m.decode_index(&[0, 0, 1, 1]), Err(ShapingError::NotInCodebook));
    }

    #[test]
    fn largest_remainder() {
        let p = [0.587 / 0.998, 0.312 / 0.998, 0.014 / 0.998, 0.085 / 0.998];
        assert_eq!(largest_remainder_composition(64, &p), vec![38, 20, 1, 5]);
        assert_eq!(largest_remainder_composition(4, &[0.5, 0.5]), vec![2, 2]);
        assert_eq!(largest_remainder_composition(3, &[0.5, 0.5]), vec![2, 1]);
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[3, 1]), BigUint::from(4u32));
        assert_eq!(multinomial(&[2, 2, 2]), BigUint::from(90u32));
        assert_eq!(multinomial(&[0, 5]), BigUint::from(1u32));
    }
}
