//! Systematic CRC over GF(2).
//!
//! Bit `i` of a word is the coefficient of `x^i`. Encoding a message `w(x)`
//! of length `L` yields `u(x) = x^m w(x) + (x^m w(x) mod p(x))`, so
//! `u[i + m] = w[i]` and the remainder occupies indices `0..m`.

use crate::Bit;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrcError {
    #[error("CRC polynomial must have degree >= 1, a leading term and a constant term")]
    InvalidPolynomial,
    #[error("cannot parse polynomial coefficients '{0}'")]
    Parse(String),
}

/// Generator polynomial `p(x)` of degree `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CrcSpec {
    degree: usize,
    // Bit i is p_i.
    coefficients: u64,
}

impl CrcSpec {
    /// `coefficients` has bit `i` set for every `x^i` term, e.g. degree 6 with
    /// `0x43` is `x^6 + x + 1`.
    pub fn new(degree: usize, coefficients: u64) -> Result<Self, CrcError> {
        if degree == 0
            || degree > 63
            || coefficients >> degree != 1
            || coefficients & 1 == 0
        {
            return Err(CrcError::InvalidPolynomial);
        }
        Ok(Self {
            degree,
            coefficients,
        })
    }

    /// Parses a hexadecimal coefficient string such as `0x43`.
    pub fn from_hex(degree: usize, hex: &str) -> Result<Self, CrcError> {
        let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
        let coefficients =
            u64::from_str_radix(digits, 16).map_err(|_| CrcError::Parse(hex.to_string()))?;
        Self::new(degree, coefficients)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> u64 {
        self.coefficients
    }

    pub fn to_hex(&self) -> String {
        format!("0x{:x}", self.coefficients)
    }

    /// Every degree-`m` polynomial with `p_m = p_0 = 1`, in increasing
    /// coefficient order; there are `2^(m-1)` of them.
    pub fn enumerate(degree: usize) -> Vec<CrcSpec> {
        if degree == 0 || degree > 63 {
            return Vec::new();
        }
        let top = 1u64 << degree;
        if degree == 1 {
            return vec![CrcSpec::new(1, 0b11).unwrap()];
        }
        (0..1u64 << (degree - 1))
            .map(|mid| CrcSpec::new(degree, top | (mid << 1) | 1).unwrap())
            .collect()
    }

    /// Remainder of `x^m w(x)` divided by `p(x)`, as `m` bits (index = power).
    pub fn remainder(&self, msg: &[Bit]) -> Vec<Bit> {
        let m = self.degree;
        let low = self.coefficients & ((1u64 << m) - 1);
        // Long division, feeding message bits from the highest power down.
        let mut reg = 0u64;
        for &b in msg.iter().rev() {
            let feedback = ((reg >> (m - 1)) & 1) ^ (b as u64 & 1);
            reg = (reg << 1) & ((1u64 << m) - 1);
            if feedback == 1 {
                reg ^= low;
            }
        }
        (0..m).map(|i| ((reg >> i) & 1) as Bit).collect()
    }

    pub fn encode(&self, msg: &[Bit]) -> Vec<Bit> {
        let mut word = self.remainder(msg);
        word.extend_from_slice(msg);
        word
    }

    /// True when the word polynomial is divisible by `p(x)`.
    pub fn check(&self, word: &[Bit]) -> bool {
        let m = self.degree;
        if word.len() < m {
            return word.iter().all(|&b| b == 0);
        }
        let (rem, msg) = word.split_at(m);
        self.remainder(msg) == rem
    }

    /// For each parity bit `i`, the message positions whose XOR forms it
    /// (the columns of the systematic generator matrix).
    pub fn parity_sets(&self, msg_len: usize) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.degree];
        let mut unit = vec![0 as Bit; msg_len];
        for j in 0..msg_len {
            unit[j] = 1;
            for (i, &r) in self.remainder(&unit).iter().enumerate() {
                if r == 1 {
                    sets[i].push(j);
                }
            }
            unit[j] = 0;
        }
        sets
    }
}

impl std::fmt::Display for CrcSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = (0..=self.degree)
            .rev()
            .filter(|i| (self.coefficients >> i) & 1 == 1)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}
