//! Systematic rate `k0/(k0+1)` feedback convolutional codes and tail-biting
//! encoding.
//!
//! A code is given by Ungerboeck parity-check polynomials `h^0 .. h^k0`
//! (bit `i` of each is the coefficient of `D^i`). The encoder is the
//! observer-form realization of
//! `h^0(D) y^0(D) = h^1(D) x^1(D) + ... + h^k0(D) x^k0(D)` with state
//! registers `s_1 .. s_nu`:
//!
//! ```text
//! y^0_t      = s_1(t)
//! s_i(t + 1) = s_{i+1}(t) + h^0_i y^0_t + sum_j h^j_i x^j_t     (s_{nu+1} = 0)
//! ```
//!
//! State `v` packs `s_i` into bit `i - 1`, so the parity bit of every edge
//! leaving `v` is `v & 1`. Input frame `u` packs `x^j` into bit `j - 1` and the
//! output label is `l = (u << 1) | parity`.

mod codes;
mod trellis;

pub use codes::{shipped_code, shipped_codes, ShippedCode};
pub use trellis::{build_trellis, Edge, StateSpace, TailBitingEncoder, Trellis};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TbccError {
    #[error("unrealizable code: {0}")]
    UnrealizableSpec(String),
    #[error("A^{frames} + I is singular for this code; nearby valid frame counts: {nearby:?}")]
    SingularMatrix { frames: usize, nearby: Vec<usize> },
    #[error("expected {expected} frames, got {got}")]
    FrameCount { expected: usize, got: usize },
    #[error("input frame {0} out of range")]
    InvalidFrame(usize),
    #[error("cannot parse octal polynomial '{0}'")]
    Parse(String),
}

/// `(k0 + 1, k0, nu)` systematic feedback code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCodeSpec {
    k0: usize,
    nu: usize,
    parity_polys: Vec<u64>,
}

impl ConvCodeSpec {
    /// `parity_polys[j]` is `h^j`, with `h^0` the feedback polynomial.
    pub fn new(k0: usize, nu: usize, parity_polys: Vec<u64>) -> Result<Self, TbccError> {
        if k0 == 0 || k0 > 7 {
            return Err(TbccError::UnrealizableSpec(format!("k0 = {k0} unsupported")));
        }
        if nu == 0 || nu > 16 {
            return Err(TbccError::UnrealizableSpec(format!("nu = {nu} unsupported")));
        }
        if parity_polys.len() != k0 + 1 {
            return Err(TbccError::UnrealizableSpec(format!(
                "expected {} parity-check polynomials, got {}",
                k0 + 1,
                parity_polys.len()
            )));
        }
        let h0 = parity_polys[0];
        if h0 >> nu != 1 || h0 & 1 == 0 {
            return Err(TbccError::UnrealizableSpec(format!(
                "h^0 = {h0:o} must have degree {nu} and a nonzero constant term"
            )));
        }
        for (j, &h) in parity_polys.iter().enumerate().skip(1) {
            if h >> (nu + 1) != 0 || h & 1 != 0 {
                return Err(TbccError::UnrealizableSpec(format!(
                    "h^{j} = {h:o} must have degree <= {nu} and no constant term"
                )));
            }
        }
        Ok(Self {
            k0,
            nu,
            parity_polys,
        })
    }

    /// Parses octal strings, `h^0` first, e.g. `["13", "04", "0"]`.
    pub fn from_octal<S: AsRef<str>>(k0: usize, nu: usize, polys: &[S]) -> Result<Self, TbccError> {
        let parsed = polys
            .iter()
            .map(|s| {
                u64::from_str_radix(s.as_ref().trim(), 8)
                    .map_err(|_| TbccError::Parse(s.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(k0, nu, parsed)
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn n0(&self) -> usize {
        self.k0 + 1
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn parity_polys(&self) -> &[u64] {
        &self.parity_polys
    }

    pub fn parity_octal(&self) -> Vec<String> {
        self.parity_polys.iter().map(|h| format!("{h:o}")).collect()
    }

    /// One encoder step from state `v` with input frame `u`: `(label, next)`.
    pub(crate) fn step(&self, v: usize, u: usize) -> (usize, usize) {
        let parity = v & 1;
        let mut next = 0usize;
        for i in 1..=self.nu {
            let mut bit = if i < self.nu { (v >> i) & 1 } else { 0 };
            if (self.parity_polys[0] >> i) & 1 == 1 {
                bit ^= parity;
            }
            for j in 1..=self.k0 {
                if (self.parity_polys[j] >> i) & 1 == 1 {
                    bit ^= (u >> (j - 1)) & 1;
                }
            }
            next |= bit << (i - 1);
        }
        ((u << 1) | parity, next)
    }
}
