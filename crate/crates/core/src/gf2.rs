//! Small dense matrices over GF(2), one `u64` bit mask per row.

/// A `rows x cols` binary matrix with `cols <= 64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: Vec<u64>,
    cols: usize,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(cols <= 64);
        Self {
            rows: vec![0; rows],
            cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i] = 1 << i;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.rows[r] >> c) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        if value {
            self.rows[r] |= 1 << c;
        } else {
            self.rows[r] &= !(1 << c);
        }
    }

    /// `M x` where bit `j` of `x` is the `j`-th vector entry.
    pub fn mul_vec(&self, x: u64) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &row)| acc | ((((row & x).count_ones() & 1) as u64) << i))
    }

    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.nrows());
        let mut out = BitMatrix::zeros(self.nrows(), other.cols);
        for (i, &row) in self.rows.iter().enumerate() {
            let mut acc = 0;
            for (k, &orow) in other.rows.iter().enumerate() {
                if (row >> k) & 1 == 1 {
                    acc ^= orow;
                }
            }
            out.rows[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.nrows(), other.nrows());
        assert_eq!(self.cols, other.cols);
        BitMatrix {
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a ^ b).collect(),
            cols: self.cols,
        }
    }

    pub fn pow(&self, mut e: usize) -> BitMatrix {
        assert_eq!(self.nrows(), self.cols);
        let mut base = self.clone();
        let mut acc = BitMatrix::identity(self.cols);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        let n = self.nrows();
        assert_eq!(n, self.cols);
        let mut a = self.rows.clone();
        let mut inv = BitMatrix::identity(n).rows;
        for col in 0..n {
            let pivot = (col..n).find(|&r| (a[r] >> col) & 1 == 1)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            for r in 0..n {
                if r != col && (a[r] >> col) & 1 == 1 {
                    a[r] ^= a[col];
                    inv[r] ^= inv[col];
                }
            }
        }
        Some(BitMatrix { rows: inv, cols: n })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_rows(rows: &[u64], cols: usize) -> BitMatrix {
        BitMatrix {
            rows: rows.to_vec(),
            cols,
        }
    }

    #[test]
    fn singular_detected() {
        let m = from_rows(&[0b11, 0b11], 2);
        assert!(m.inverse().is_none());
        let id = BitMatrix::identity(3);
        assert_eq!(id.inverse().unwrap(), id);
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let a = from_rows(&[0b010, 0b100, 0b011], 3);
        let mut acc = BitMatrix::identity(3);
        for e in 0..20 {
            assert_eq!(a.pow(e), acc);
            acc = acc.mul(&a);
        }
    }

    proptest! {
        #[test]
        fn inverse_is_two_sided(rows in proptest::collection::vec(0u64..64, 6)) {
            let m = from_rows(&rows, 6);
            if let Some(inv) = m.inverse() {
                prop_assert_eq!(m.mul(&inv), BitMatrix::identity(6));
                prop_assert_eq!(inv.mul(&m), BitMatrix::identity(6));
            }
        }

        #[test]
        fn mul_vec_is_linear(rows in proptest::collection::vec(0u64..256, 8), x in 0u64..256, y in 0u64..256) {
            let m = from_rows(&rows, 8);
            prop_assert_eq!(m.mul_vec(x ^ y), m.mul_vec(x) ^ m.mul_vec(y));
        }
    }
}
