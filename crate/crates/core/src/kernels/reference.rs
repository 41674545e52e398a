//! Full-precision reference multiplies and the binary × real routine.

use super::Executor;
use crate::error::{ensure_dims, Result};
use crate::tensor::{BitMatrix, CsrMatrix, DenseMatrix};

/// Triple-loop `a · b`; every cell is summed in ascending `k` in `f64`.
pub fn gemm_ref_dense(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_dims!(
        a.cols() == b.rows(),
        "{}x{} · {}x{}",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
    let n = b.cols();
    let mut out = Vec::with_capacity(a.rows() * n);
    let mut acc = vec![0f64; n];
    for r in 0..a.rows() {
        acc.fill(0.0);
        for (k, &av) in a.row(r).iter().enumerate() {
            let av = f64::from(av);
            for (cell, &bv) in acc.iter_mut().zip(b.row(k)) {
                *cell += av * f64::from(bv);
            }
        }
        out.extend(acc.iter().map(|&v| v as f32));
    }
    Ok(DenseMatrix::from_raw(a.rows(), n, out))
}

/// Binary row × real vector as `2·I₊ − T`, where `I₊` sums the entries of
/// `a` under `+1` bits and `T = Σ a`.
///
/// Pass `total` when `T` is already known (it is shared by every row that
/// multiplies the same column).
pub fn dot_1x32_reference(w: &[u64], a: &[f32], n: usize, total: Option<f64>) -> Result<f64> {
    ensure_dims!(a.len() == n, "real operand has {} entries, expected {n}", a.len());
    ensure_dims!(n <= w.len() * 64, "logical length {n} exceeds {} stored bits", w.len() * 64);
    let total = total.unwrap_or_else(|| a.iter().map(|&v| f64::from(v)).sum());
    let mut plus = 0f64;
    for (wi, &word) in w.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            let i = wi * 64 + bits.trailing_zeros() as usize;
            plus += f64::from(a[i]);
            bits &= bits - 1;
        }
    }
    Ok(2.0 * plus - total)
}

impl Executor {
    /// `γ · (w · b)` for a binary `M × K` matrix and a real `K × N` matrix,
    /// using the `2·I₊ − T` form with the column totals `T` computed once.
    pub fn gemm_1x32(&self, w: &BitMatrix, gamma: f32, b: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_dims!(
            w.cols() == b.rows(),
            "1/32: binary operand has K = {}, real operand has {} rows",
            w.cols(),
            b.rows()
        );
        let n = b.cols();
        let mut totals = vec![0f64; n];
        for k in 0..b.rows() {
            for (t, &v) in totals.iter_mut().zip(b.row(k)) {
                *t += f64::from(v);
            }
        }
        let gamma = f64::from(gamma);
        let data = self.fill_rows(w.rows(), n, |r, out: &mut [f32]| {
            let mut plus = vec![0f64; n];
            for (wi, &word) in w.row(r).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let k = wi * 64 + bits.trailing_zeros() as usize;
                    for (p, &v) in plus.iter_mut().zip(b.row(k)) {
                        *p += f64::from(v);
                    }
                    bits &= bits - 1;
                }
            }
            for ((o, p), t) in out.iter_mut().zip(&plus).zip(&totals) {
                *o = (gamma * (2.0 * p - t)) as f32;
            }
        });
        Ok(DenseMatrix::from_raw(w.rows(), n, data))
    }

    /// CSR × dense, accumulating each output row in stored column order.
    pub fn spmm_csr(&self, a: &CsrMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_dims!(
            a.cols() == b.rows(),
            "sparse {}x{} · dense {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        );
        let n = b.cols();
        let data = self.fill_rows(a.rows(), n, |r, out: &mut [f32]| {
            let mut acc = vec![0f64; n];
            for (c, v) in a.row(r) {
                let v = f64::from(v);
                for (cell, &bv) in acc.iter_mut().zip(b.row(c)) {
                    *cell += v * f64::from(bv);
                }
            }
            for (o, v) in out.iter_mut().zip(acc) {
                *o = v as f32;
            }
        });
        Ok(DenseMatrix::from_raw(a.rows(), n, data))
    }
}

pub fn gemm_1x32(w: &BitMatrix, gamma: f32, b: &DenseMatrix) -> Result<DenseMatrix> {
    Executor::default().gemm_1x32(w, gamma, b)
}

pub fn spmm_csr(a: &CsrMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    Executor::default().spmm_csr(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::pack_signs;

    #[test]
    fn ref_dense_examples() {
        let a = DenseMatrix::new(1, 1, vec![2.0]).unwrap();
        let b = DenseMatrix::new(1, 1, vec![3.0]).unwrap();
        assert_eq!(gemm_ref_dense(&a, &b).unwrap().as_slice(), &[6.0]);
        let b = DenseMatrix::from_fn(4, 3, |r, c| (r * 3 + c) as f32 - 4.5);
        assert_eq!(gemm_ref_dense(&DenseMatrix::identity(4), &b).unwrap(), b);
        assert!(gemm_ref_dense(&b, &b).is_err());
    }

    #[test]
    fn dot_1x32_examples() {
        let w = [0b101u64];
        let a = [0.5f32, 2.0, -1.0];
        assert_eq!(dot_1x32_reference(&w, &a, 3, None).unwrap(), -2.5);
        let total = 1.5;
        assert_eq!(dot_1x32_reference(&[0b111], &a, 3, Some(total)).unwrap(), total);
        assert_eq!(dot_1x32_reference(&[0], &a, 3, None).unwrap(), -total);
        assert!(dot_1x32_reference(&w, &a, 4, None).is_err());
    }

    #[test]
    fn gemm_1x32_matches_rowwise_dot() {
        let signs = DenseMatrix::from_fn(3, 70, |r, c| if (r + c) % 3 == 0 { -1.0 } else { 1.0 });
        let w = pack_signs(&signs);
        let b = DenseMatrix::from_fn(70, 2, |r, c| (r as f32 * 0.25) - c as f32);
        let got = gemm_1x32(&w, 0.5, &b).unwrap();
        let bt = b.transpose();
        for r in 0..3 {
            for c in 0..2 {
                let d = dot_1x32_reference(w.row(r), bt.row(c), 70, None).unwrap();
                assert_eq!(got.get(r, c), (0.5 * d) as f32);
            }
        }
        let expected = gemm_ref_dense(&signs.map(|v| v * 0.5), &b).unwrap();
        assert!(got.relative_error(&expected).unwrap() < 1e-7);
    }

    #[test]
    fn spmm_examples() {
        let b = DenseMatrix::from_fn(3, 4, |r, c| (r * 4 + c) as f32);
        let empty = CsrMatrix::empty(2, 3);
        assert_eq!(spmm_csr(&empty, &b).unwrap(), DenseMatrix::zeros(2, 4));
        let one = CsrMatrix::new(2, 3, vec![0, 0, 1], vec![2], vec![-2.0]).unwrap();
        let c = spmm_csr(&one, &b).unwrap();
        assert_eq!(c.row(0), &[0.0; 4]);
        let expected: Vec<f32> = b.row(2).iter().map(|v| -2.0 * v).collect();
        assert_eq!(c.row(1), expected.as_slice());
        assert!(spmm_csr(&one, &DenseMatrix::zeros(2, 2)).is_err());
    }
}
