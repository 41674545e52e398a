use super::DenseMatrix;
use crate::error::{Error, Result};

/// Default row padding granule: one 512-bit SIMD register.
pub const DEFAULT_LANE_BITS: usize = 512;

const WORD_BITS: usize = 64;

/// A bit-packed matrix.
///
/// Bit `b` at logical index `i` of a row encodes `2b − 1 ∈ {−1, +1}` when the
/// matrix carries signs, or the literal bit when it carries a mask. Bits are
/// little-endian inside each `u64` (index `i` lives in word `i / 64`, bit
/// `i % 64`). Every row is padded to a multiple of the lane width and all
/// padding bits are zero, so kernels may stream whole lanes without tails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    lane_bits: usize,
    words: Vec<u64>,
}

fn padded_words(cols: usize, lane_bits: usize) -> usize {
    let lane_words = lane_bits / WORD_BITS;
    cols.div_ceil(WORD_BITS).div_ceil(lane_words).max(1) * lane_words
}

/// Mask of the valid bits in word `w` of a row with `cols` logical columns.
#[inline]
fn valid_bits(cols: usize, w: usize) -> u64 {
    let start = w * WORD_BITS;
    if start + WORD_BITS <= cols {
        u64::MAX
    } else if start >= cols {
        0
    } else {
        (1u64 << (cols - start)) - 1
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::zeros_with_lane(rows, cols, DEFAULT_LANE_BITS).expect("default lane is valid")
    }

    pub fn zeros_with_lane(rows: usize, cols: usize, lane_bits: usize) -> Result<Self> {
        if lane_bits == 0 || !lane_bits.is_multiple_of(WORD_BITS) {
            return Err(Error::InvalidParameter(format!(
                "lane width {lane_bits} is not a positive multiple of 64"
            )));
        }
        let words_per_row = padded_words(cols, lane_bits);
        let total = rows
            .checked_mul(words_per_row)
            .ok_or_else(|| Error::InvalidData(format!("{rows}x{cols} bit matrix overflows")))?;
        Ok(Self {
            rows,
            cols,
            words_per_row,
            lane_bits,
            words: vec![0; total],
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> bool) -> Self {
        Self::from_fn_with_lane(rows, cols, DEFAULT_LANE_BITS, f).expect("default lane is valid")
    }

    pub fn from_fn_with_lane(
        rows: usize,
        cols: usize,
        lane_bits: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut m = Self::zeros_with_lane(rows, cols, lane_bits)?;
        for r in 0..rows {
            let row = &mut m.words[r * m.words_per_row..(r + 1) * m.words_per_row];
            for c in 0..cols {
                if f(r, c) {
                    row[c / WORD_BITS] |= 1 << (c % WORD_BITS);
                }
            }
        }
        Ok(m)
    }

    /// Adopts raw words, checking the row stride and that padding is zero.
    ///
    /// The lane width is recovered as the widest of 512/256/128/64 bits that
    /// divides the row stride.
    pub fn from_words(
        rows: usize,
        cols: usize,
        words_per_row: usize,
        words: Vec<u64>,
    ) -> Result<Self> {
        if words_per_row == 0 || words_per_row * WORD_BITS < cols {
            return Err(Error::InvalidData(format!(
                "{words_per_row} words per row cannot hold {cols} columns"
            )));
        }
        let total = rows
            .checked_mul(words_per_row)
            .ok_or_else(|| Error::InvalidData(format!("{rows}x{words_per_row} words overflows")))?;
        if words.len() != total {
            return Err(Error::InvalidData(format!(
                "expected {total} words, got {}",
                words.len()
            )));
        }
        let lane_bits = [512, 256, 128, 64]
            .into_iter()
            .find(|lane| (words_per_row * WORD_BITS).is_multiple_of(*lane))
            .unwrap_or(WORD_BITS);
        let m = Self {
            rows,
            cols,
            words_per_row,
            lane_bits,
            words,
        };
        if let Some(r) = (0..rows).find(|&r| !m.row_padding_clean(r)) {
            return Err(Error::InvalidData(format!("row {r} has nonzero padding bits")));
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Logical column count.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn lane_bits(&self) -> usize {
        self.lane_bits
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.row(r)[c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    /// `±1` decoding of bit `(r, c)`.
    #[inline]
    pub fn sign(&self, r: usize, c: usize) -> i32 {
        if self.get(r, c) {
            1
        } else {
            -1
        }
    }

    pub fn count_ones_row(&self, r: usize) -> u32 {
        self.row(r).iter().map(|w| w.count_ones()).sum()
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    fn row_padding_clean(&self, r: usize) -> bool {
        self.row(r)
            .iter()
            .enumerate()
            .all(|(w, &word)| word & !valid_bits(self.cols, w) == 0)
    }

    /// True when every bit at a column index `≥ cols` is zero.
    pub fn padding_is_clean(&self) -> bool {
        (0..self.rows).all(|r| self.row_padding_clean(r))
    }

    /// Same logical bits re-laid out with a different lane width.
    pub fn with_lane(&self, lane_bits: usize) -> Result<Self> {
        Self::from_fn_with_lane(self.rows, self.cols, lane_bits, |r, c| self.get(r, c))
    }

    /// Element-wise combination of two equally shaped matrices; padding is
    /// re-masked afterwards so `op` may freely set high bits.
    pub fn zip_with(&self, other: &BitMatrix, op: impl Fn(u64, u64) -> u64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let other = if other.words_per_row == self.words_per_row {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.with_lane(self.lane_bits)?)
        };
        let mut out = self.clone();
        for r in 0..self.rows {
            let base = r * self.words_per_row;
            for w in 0..self.words_per_row {
                let v = op(self.words[base + w], other.words[base + w]);
                out.words[base + w] = v & valid_bits(self.cols, w);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn_with_lane(self.cols, self.rows, self.lane_bits, |r, c| self.get(c, r))
            .expect("lane already validated")
    }
}

/// Sign-packs a dense matrix row by row: bit = 1 iff entry ≥ 0 (so sign(0) = +1).
pub fn pack_signs(m: &DenseMatrix) -> BitMatrix {
    BitMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c) >= 0.0)
}

/// Sign-packs the columns of a `K × N` matrix into an `N × K` bit matrix,
/// the layout GEMM kernels expect for their second operand.
pub fn pack_signs_columns(m: &DenseMatrix) -> BitMatrix {
    BitMatrix::from_fn(m.cols(), m.rows(), |c, k| m.get(k, c) >= 0.0)
}

pub fn unpack_signs(b: &BitMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(b.rows(), b.cols(), |r, c| b.sign(r, c) as f32)
}

/// Flips every logical bit of a mask; padding stays zero.
pub fn complement_mask(m: &BitMatrix) -> BitMatrix {
    let mut out = m.clone();
    let wpr = m.words_per_row;
    for (i, word) in out.words.iter_mut().enumerate() {
        *word = !*word & valid_bits(m.cols, i % wpr);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_row(v: &[f32]) -> DenseMatrix {
        DenseMatrix::new(1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn pack_examples() {
        assert_eq!(pack_signs(&dense_row(&[1.0, -1.0, 1.0])).row(0)[0], 5);
        assert_eq!(pack_signs(&dense_row(&[-1.0; 4])).row(0)[0], 0);
        assert_eq!(pack_signs(&dense_row(&[1.0; 64])).row(0)[0], u64::MAX);
    }

    #[test]
    fn zero_packs_as_plus_one() {
        assert_eq!(pack_signs(&dense_row(&[0.0, -0.5])).row(0)[0], 1);
    }

    #[test]
    fn unpack_examples() {
        let b = BitMatrix::from_words(1, 3, 8, {
            let mut w = vec![0; 8];
            w[0] = 5;
            w
        })
        .unwrap();
        assert_eq!(unpack_signs(&b).as_slice(), &[1.0, -1.0, 1.0]);
        let z = BitMatrix::zeros(1, 2);
        assert_eq!(unpack_signs(&z).as_slice(), &[-1.0, -1.0]);
    }

    #[test]
    fn default_rows_are_lane_padded() {
        let b = BitMatrix::zeros(3, 70);
        assert_eq!(b.words_per_row(), 8);
        assert_eq!(BitMatrix::zeros(1, 513).words_per_row(), 16);
        assert_eq!(BitMatrix::zeros_with_lane(1, 70, 64).unwrap().words_per_row(), 2);
        assert!(BitMatrix::zeros_with_lane(1, 70, 100).is_err());
    }

    #[test]
    fn complement_examples() {
        let m = BitMatrix::from_fn(1, 4, |_, c| c == 0 || c == 3);
        let c = complement_mask(&m);
        assert_eq!(c.row(0)[0], 0b0110);
        let m = BitMatrix::from_fn(1, 3, |_, c| c != 1);
        let c = complement_mask(&m);
        assert_eq!(c.row(0)[0], 0b010);
        assert!(c.row(0)[1..].iter().all(|&w| w == 0));
        assert_eq!(complement_mask(&c), m);
    }

    #[test]
    fn from_words_rejects_dirty_padding() {
        let mut w = vec![0u64; 8];
        w[0] = 1 << 10;
        assert!(BitMatrix::from_words(1, 10, 8, w).is_err());
        assert!(BitMatrix::from_words(1, 600, 8, vec![0; 8]).is_err());
    }

    #[test]
    fn exhaustive_bijection_small_n() {
        for n in 1..=12usize {
            for bits in 0u64..(1 << n) {
                let v: Vec<f32> = (0..n)
                    .map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect();
                let packed = pack_signs(&dense_row(&v));
                assert_eq!(packed.row(0)[0], bits);
                assert_eq!(unpack_signs(&packed).as_slice(), v.as_slice());
            }
        }
    }

    proptest! {
        #[test]
        fn roundtrip_and_padding(rows in 1usize..5, cols in 1usize..300, seed: u64) {
            let mut state = seed | 1;
            let b = BitMatrix::from_fn(rows, cols, |_, _| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state & 1 == 1
            });
            prop_assert!(b.padding_is_clean());
            prop_assert_eq!(pack_signs(&unpack_signs(&b)), b.clone());
            let c = complement_mask(&b);
            prop_assert!(c.padding_is_clean());
            prop_assert_eq!(c.count_ones() + b.count_ones(), (rows * cols) as u64);
            prop_assert!(b.transpose().padding_is_clean());
        }
    }
}
