//! 2-bit uniform quantization and the bijection between a zero-centered
//! 2-bit matrix and its `{t, h, m}` bit planes.

use crate::error::{ensure_dims, Error, Result};
use crate::tensor::{BitMatrix, DenseMatrix, ThmPlanes};

/// Staging form of a 2-bit matrix: one level `p ∈ {0, 1, 2, 3}` per byte,
/// representing the value `p · scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBitMatrix {
    rows: usize,
    cols: usize,
    levels: Vec<u8>,
    scale: f32,
}

fn check_scale(s: f32) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("scale must be positive and finite, got {s}")))
    }
}

impl TwoBitMatrix {
    pub fn new(rows: usize, cols: usize, levels: Vec<u8>, scale: f32) -> Result<Self> {
        check_scale(scale)?;
        if Some(levels.len()) != rows.checked_mul(cols) {
            return Err(Error::InvalidData(format!(
                "{rows}x{cols} needs {} levels, got {}",
                rows.saturating_mul(cols),
                levels.len()
            )));
        }
        if let Some(i) = levels.iter().position(|&p| p > 3) {
            return Err(Error::InvalidData(format!("level {} at index {i} is not 2-bit", levels[i])));
        }
        Ok(Self {
            rows,
            cols,
            levels,
            scale,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        scale: f32,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut levels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                levels.push(f(r, c));
            }
        }
        Self::new(rows, cols, levels, scale)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn scale(&self) -> f32 {
        self.scale
    }

    #[inline]
    pub fn level(&self, r: usize, c: usize) -> u8 {
        assert!(r < self.rows && c < self.cols);
        self.levels[r * self.cols + c]
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    /// Uncentered value `p · s`.
    pub fn value(&self, r: usize, c: usize) -> f32 {
        f32::from(self.level(r, c)) * self.scale
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |r, c| self.value(r, c))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.scale, |r, c| self.level(c, r))
            .expect("levels already validated")
    }
}

/// `clamp(round(v / s), 0, 3)` with ties rounded away from zero.
pub fn quantize_uniform_2bit(m: &DenseMatrix, s: f32) -> Result<TwoBitMatrix> {
    check_scale(s)?;
    let levels = m
        .as_slice()
        .iter()
        .map(|&v| (v / s).round().clamp(0.0, 3.0) as u8)
        .collect();
    TwoBitMatrix::new(m.rows(), m.cols(), levels, s)
}

/// Zero-centered view of a 2-bit matrix: value `(p − 3/2) · s`, mean `μ = 3/2 · s`.
#[derive(Debug, Clone, Copy)]
pub struct Centered<'a> {
    levels: &'a TwoBitMatrix,
    mean: f32,
}

impl Centered<'_> {
    /// The subtracted mean `μ`.
    pub fn mean(&self) -> f32 {
        self.mean
    }

    pub fn value(&self, r: usize, c: usize) -> f32 {
        (f32::from(self.levels.level(r, c)) - 1.5) * self.levels.scale
    }

    pub fn levels(&self) -> &TwoBitMatrix {
        self.levels
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.levels.rows, self.levels.cols, |r, c| self.value(r, c))
    }
}

pub fn zero_center(q: &TwoBitMatrix) -> Centered<'_> {
    Centered {
        levels: q,
        mean: 1.5 * q.scale,
    }
}

/// Splits a 2-bit matrix into `{t, h, m}` planes, one bit row per matrix row.
///
/// To feed the second operand of a GEMM, decompose its transpose so each
/// output column's planes are contiguous.
pub fn decompose_thm(q: &TwoBitMatrix) -> ThmPlanes {
    let t = BitMatrix::from_fn(q.rows, q.cols, |r, c| q.level(r, c) == 3);
    let h = BitMatrix::from_fn(q.rows, q.cols, |r, c| q.level(r, c) == 2);
    let m = BitMatrix::from_fn(q.rows, q.cols, |r, c| matches!(q.level(r, c), 0 | 3));
    ThmPlanes::from_parts_unchecked(t, h, m, q.scale, None)
}

/// Inverse of [`decompose_thm`].
pub fn recompose_thm(p: &ThmPlanes) -> Result<TwoBitMatrix> {
    let (rows, cols) = (p.rows(), p.cols());
    let mut levels = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let bits = (p.t().get(r, c), p.h().get(r, c), p.m().get(r, c));
            let level = match bits {
                (false, false, true) => 0,
                (false, false, false) => 1,
                (false, true, false) => 2,
                (true, false, true) => 3,
                (t, h, m) => return Err(Error::InvalidEncoding { row: r, col: c, t, h, m }),
            };
            levels.push(level);
        }
    }
    TwoBitMatrix::new(rows, cols, levels, p.scale())
}

/// Sum of `2p − 3` over the row, i.e. twice the centered row sum in units of `s`.
pub(crate) fn doubled_centered_row_sum(p: &ThmPlanes, r: usize) -> i64 {
    let k = p.cols() as i64;
    let n3 = i64::from(p.t().count_ones_row(r));
    let n2 = i64::from(p.h().count_ones_row(r));
    let nm = i64::from(p.m().count_ones_row(r));
    let n1 = k - nm - n2;
    // Σp = 3·n3 + 2·n2 + n1
    2 * (3 * n3 + 2 * n2 + n1) - 3 * k
}

/// Per-row `γ·μ·Σ_i sign_i`, the contribution of the activation mean to a
/// binary-weight × 2-bit-activation product. GEMM output starts from these
/// values rather than from zero.
pub fn row_correction_1x2(w_bits: &BitMatrix, gamma: f32, mu: f32) -> Vec<f64> {
    let k = w_bits.cols() as i64;
    (0..w_bits.rows())
        .map(|r| {
            let sign_sum = 2 * i64::from(w_bits.count_ones_row(r)) - k;
            f64::from(gamma) * f64::from(mu) * sign_sum as f64
        })
        .collect()
}

/// Offline terms of a 2-bit × 2-bit product.
///
/// With `w = w̄ + μ_w` and `a = ā + μ_a` over a shared length `n`:
/// `w·a = w̄·ā + μ_a·Σw̄ + μ_w·Σā + n·μ_w·μ_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrections2x2 {
    /// `μ_a · Σ_k w̄[r][k]` per weight row.
    pub row_terms: Vec<f64>,
    /// `μ_w · Σ_k ā[k][c]` per activation column.
    pub col_terms: Vec<f64>,
    /// `n · μ_w · μ_a`.
    pub const_term: f64,
}

impl Corrections2x2 {
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.row_terms[r] + self.col_terms[c] + self.const_term
    }
}

/// `w` holds `M × K` weight planes; `a` holds the activation planes in
/// column-packed form (`N × K`, one row per output column).
pub fn corrections_2x2(w: &ThmPlanes, a: &ThmPlanes) -> Result<Corrections2x2> {
    ensure_dims!(
        w.cols() == a.cols(),
        "weight planes have K = {}, activation planes have K = {}",
        w.cols(),
        a.cols()
    );
    let (s_w, s_a) = (f64::from(w.scale()), f64::from(a.scale()));
    let (mu_w, mu_a) = (1.5 * s_w, 1.5 * s_a);
    let row_terms = (0..w.rows())
        .map(|r| mu_a * s_w * doubled_centered_row_sum(w, r) as f64 / 2.0)
        .collect();
    let col_terms = (0..a.rows())
        .map(|c| mu_w * s_a * doubled_centered_row_sum(a, c) as f64 / 2.0)
        .collect();
    Ok(Corrections2x2 {
        row_terms,
        col_terms,
        const_term: w.cols() as f64 * mu_w * mu_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(levels: &[u8], s: f32) -> TwoBitMatrix {
        TwoBitMatrix::new(1, levels.len(), levels.to_vec(), s).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let m = DenseMatrix::new(1, 4, vec![0.0, 0.9, 2.2, 7.0]).unwrap();
        assert_eq!(quantize_uniform_2bit(&m, 1.0).unwrap().levels(), &[0, 1, 2, 3]);
        let z = DenseMatrix::zeros(2, 3);
        assert!(quantize_uniform_2bit(&z, 0.3).unwrap().levels().iter().all(|&p| p == 0));
        for s in [0.25f32, 1.0, 3.0, 0.1] {
            let m = DenseMatrix::new(1, 4, vec![0.0, s, 2.0 * s, 3.0 * s]).unwrap();
            assert_eq!(quantize_uniform_2bit(&m, s).unwrap().levels(), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn quantize_rounds_half_away_and_clamps() {
        let m = DenseMatrix::new(1, 4, vec![0.5, 1.5, -4.0, 2.5]).unwrap();
        assert_eq!(quantize_uniform_2bit(&m, 1.0).unwrap().levels(), &[1, 2, 0, 3]);
        assert!(quantize_uniform_2bit(&m, 0.0).is_err());
        assert!(quantize_uniform_2bit(&m, -1.0).is_err());
    }

    #[test]
    fn zero_center_examples() {
        let q = row(&[0, 1, 2, 3], 1.0);
        let c = zero_center(&q);
        assert_eq!(c.to_dense().as_slice(), &[-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(c.mean(), 1.5);
        let q = row(&[3], 2.0);
        assert_eq!(zero_center(&q).value(0, 0), 3.0);
        let q = row(&[0, 3], 0.7);
        let c = zero_center(&q);
        assert_eq!(c.value(0, 0), -c.value(0, 1));
    }

    #[test]
    fn zero_center_is_affine() {
        let q = row(&[0, 1, 2, 3], 0.25);
        let c = zero_center(&q);
        for i in 0..4 {
            for j in 0..4 {
                let lhs = c.value(0, i) - c.value(0, j);
                assert_eq!(lhs, (i as f32 - j as f32) * 0.25);
            }
        }
    }

    #[test]
    fn decompose_matches_table() {
        let p = decompose_thm(&row(&[0, 1, 2, 3], 1.0));
        assert_eq!(p.t().row(0)[0], 0b1000);
        assert_eq!(p.h().row(0)[0], 0b0100);
        assert_eq!(p.m().row(0)[0], 0b1001);
        let p = decompose_thm(&row(&[1; 9], 1.0));
        assert_eq!(p.t().count_ones() + p.h().count_ones() + p.m().count_ones(), 0);
    }

    #[test]
    fn recompose_examples() {
        let one = |b: bool| BitMatrix::from_fn(1, 1, |_, _| b);
        let p = ThmPlanes::new(one(false), one(false), one(true), 2.0, None).unwrap();
        let q = recompose_thm(&p).unwrap();
        assert_eq!(q.level(0, 0), 0);
        assert_eq!(zero_center(&q).value(0, 0), -3.0);
        let p = ThmPlanes::new(one(true), one(false), one(true), 1.0, None).unwrap();
        assert_eq!(recompose_thm(&p).unwrap().level(0, 0), 3);
        for m in [false, true] {
            let p = ThmPlanes::from_parts_unchecked(one(true), one(true), one(m), 1.0, None);
            assert!(matches!(recompose_thm(&p), Err(Error::InvalidEncoding { .. })));
        }
    }

    #[test]
    fn exhaustive_bijection_up_to_six() {
        for n in 1..=6u32 {
            for code in 0..4u32.pow(n) {
                let levels: Vec<u8> = (0..n).map(|i| ((code >> (2 * i)) & 3) as u8).collect();
                let q = row(&levels, 1.0);
                let p = decompose_thm(&q);
                assert!(ThmPlanes::new(p.t().clone(), p.h().clone(), p.m().clone(), 1.0, None).is_ok());
                assert_eq!(recompose_thm(&p).unwrap(), q);
            }
        }
    }

    #[test]
    fn row_correction_examples() {
        let w = BitMatrix::from_fn(1, 4, |_, c| c != 1);
        assert_eq!(row_correction_1x2(&w, 1.0, 1.5), vec![3.0]);
        assert_eq!(row_correction_1x2(&w, 2.0, 1.5), vec![6.0]);
        let balanced = BitMatrix::from_fn(1, 6, |_, c| c % 2 == 0);
        assert_eq!(row_correction_1x2(&balanced, 1.0, 1.5), vec![0.0]);
    }

    #[test]
    fn corrections_2x2_example() {
        // w levels [3, 1], a levels [0, 2] (one column) with unit scales
        let w = decompose_thm(&row(&[3, 1], 1.0));
        let a = decompose_thm(&row(&[0, 2], 1.0));
        let c = corrections_2x2(&w, &a).unwrap();
        assert_eq!(c.row_terms, vec![1.5]);
        assert_eq!(c.col_terms, vec![-1.5]);
        assert_eq!(c.const_term, 4.5);
        assert_eq!(c.at(0, 0), 4.5);
    }

    #[test]
    fn corrections_2x2_const_term() {
        for (n, sw, sa) in [(3usize, 1.0f32, 1.0f32), (7, 0.5, 2.0), (64, 0.1, 0.3)] {
            let w = decompose_thm(&TwoBitMatrix::from_fn(2, n, sw, |_, c| (c % 4) as u8).unwrap());
            let a = decompose_thm(&TwoBitMatrix::from_fn(1, n, sa, |_, _| 2).unwrap());
            let c = corrections_2x2(&w, &a).unwrap();
            let expected = 9.0 * n as f64 * f64::from(sw) * f64::from(sa) / 4.0;
            assert!((c.const_term - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn corrections_2x2_dimension_mismatch() {
        let w = decompose_thm(&row(&[0, 1, 2], 1.0));
        let a = decompose_thm(&row(&[0, 1], 1.0));
        assert!(matches!(corrections_2x2(&w, &a), Err(Error::DimensionMismatch(_))));
    }
}
