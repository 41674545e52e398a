use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};
use crate::kernels::Executor;
use crate::tensor::io::{load_bits, load_csr, sibling, store_tensor};
use crate::tensor::{pack_signs, BitMatrix, CsrMatrix, DenseMatrix, Tensor};

/// An APB-compressed matrix `A = A_bin + A_full`.
///
/// `A_bin = α·sign(A)` is kept as a full bit matrix. The full-precision
/// part is stored as the surviving weights themselves at the positions
/// where `A ∉ {−α, +α}`; the residual `A_full = A − α·sign(A)` is derived
/// from them on demand. An `f32` residual cannot always be added back to
/// `α·sign(A)` without rounding, while the surviving values reconstruct `A`
/// bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ApbLayer {
    bin: BitMatrix,
    alpha: f32,
    survivors: CsrMatrix,
}

impl ApbLayer {
    pub fn new(bin: BitMatrix, alpha: f32, survivors: CsrMatrix) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        ensure_dims!(
            bin.rows() == survivors.rows() && bin.cols() == survivors.cols(),
            "binary part {}x{} vs survivors {}x{}",
            bin.rows(),
            bin.cols(),
            survivors.rows(),
            survivors.cols()
        );
        for (r, c, v) in survivors.triplets() {
            if v.abs() == alpha {
                return Err(Error::InvalidData(format!(
                    "survivor ({r}, {c}) = {v} lies on ±alpha"
                )));
            }
            if bin.get(r, c) != (v >= 0.0) {
                return Err(Error::InvalidData(format!(
                    "survivor ({r}, {c}) = {v} disagrees with its sign bit"
                )));
            }
        }
        Ok(Self {
            bin,
            alpha,
            survivors,
        })
    }

    pub fn rows(&self) -> usize {
        self.bin.rows()
    }

    pub fn cols(&self) -> usize {
        self.bin.cols()
    }

    pub fn alpha(&self) -> f32 {
        self.alpha
    }

    /// Sign bits of every entry.
    pub fn bin(&self) -> &BitMatrix {
        &self.bin
    }

    /// The surviving full-precision weights.
    pub fn survivors(&self) -> &CsrMatrix {
        &self.survivors
    }

    /// Number of full-precision entries.
    pub fn nnz(&self) -> usize {
        self.survivors.nnz()
    }

    /// `Mask(A_i) = 1` where `A_i ∈ {−α, +α}`.
    pub fn mask(&self) -> BitMatrix {
        let mut full = vec![false; self.rows() * self.cols()];
        for (r, c, _) in self.survivors.triplets() {
            full[r * self.cols() + c] = true;
        }
        BitMatrix::from_fn(self.rows(), self.cols(), |r, c| !full[r * self.cols() + c])
    }

    /// `A_full = A − α·sign(A)` at the surviving positions, rounded to `f32`.
    pub fn residual(&self) -> CsrMatrix {
        let vals = self
            .survivors
            .triplets()
            .map(|(_, _, v)| residual_of(v, self.alpha) as f32)
            .collect();
        CsrMatrix::new(
            self.rows(),
            self.cols(),
            self.survivors.row_ptr().to_vec(),
            self.survivors.col_idx().to_vec(),
            vals,
        )
        .expect("structure copied from a valid matrix")
    }

    /// `α·sign` everywhere, overwritten by the survivors.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut data: Vec<f32> = (0..self.rows())
            .flat_map(|r| (0..self.cols()).map(move |c| (r, c)))
            .map(|(r, c)| if self.bin.get(r, c) { self.alpha } else { -self.alpha })
            .collect();
        for (r, c, v) in self.survivors.triplets() {
            data[r * self.cols() + c] = v;
        }
        DenseMatrix::from_raw(self.rows(), self.cols(), data)
    }

    /// Bits needed at `b_v` bits per value and `b_p` per position.
    pub fn memory(&self, value_bits: u32, position_bits: u32) -> Result<super::MemoryBits> {
        super::memory_bits(self.rows() * self.cols(), self.nnz(), value_bits, position_bits)
    }
}

#[inline]
fn residual_of(v: f32, alpha: f32) -> f64 {
    let s = if v >= 0.0 { 1.0 } else { -1.0 };
    f64::from(v) - s * f64::from(alpha)
}

/// Splits an APB output into its binary and full-precision parts.
pub fn decompose_apb(a: &DenseMatrix, alpha: f32) -> Result<ApbLayer> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let bin = pack_signs(a);
    let survivors = CsrMatrix::from_dense_where(a, |v| v.abs() != alpha);
    Ok(ApbLayer {
        bin,
        alpha,
        survivors,
    })
}

/// `A·B = α·(sign(A)·B) + A_full·B`.
///
/// The binary term uses the `2·I₊ − T` form per output cell; the sparse term
/// walks the survivors. Both accumulate in `f64` and round once.
pub fn layer_forward(l: &ApbLayer, b: &DenseMatrix) -> Result<DenseMatrix> {
    layer_forward_with(&Executor::default(), l, b)
}

pub fn layer_forward_with(exec: &Executor, l: &ApbLayer, b: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_dims!(
        l.cols() == b.rows(),
        "layer is {}x{}, input has {} rows",
        l.rows(),
        l.cols(),
        b.rows()
    );
    let n = b.cols();
    let mut totals = vec![0f64; n];
    for k in 0..b.rows() {
        for (t, &v) in totals.iter_mut().zip(b.row(k)) {
            *t += f64::from(v);
        }
    }
    let alpha = f64::from(l.alpha);
    let data = exec.fill_rows(l.rows(), n, |r, out: &mut [f32]| {
        let mut plus = vec![0f64; n];
        for (wi, &word) in l.bin.row(r).iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let k = wi * 64 + bits.trailing_zeros() as usize;
                for (p, &v) in plus.iter_mut().zip(b.row(k)) {
                    *p += f64::from(v);
                }
                bits &= bits - 1;
            }
        }
        let mut acc: Vec<f64> = plus.iter().zip(&totals).map(|(p, t)| alpha * (2.0 * p - t)).collect();
        for (k, v) in l.survivors.row(r) {
            let res = residual_of(v, l.alpha);
            for (cell, &bv) in acc.iter_mut().zip(b.row(k)) {
                *cell += res * f64::from(bv);
            }
        }
        for (o, v) in out.iter_mut().zip(acc) {
            *o = v as f32;
        }
    });
    Ok(DenseMatrix::from_raw(l.rows(), n, data))
}

#[derive(Serialize, Deserialize)]
struct LayerSidecar {
    alpha: f32,
}

/// Writes `<stem>.bin.btsr` (sign bits), `<stem>.full.btsr` (survivors, CSR)
/// and `<stem>.json` (`{"alpha": …}`).
pub fn store_layer(stem: impl AsRef<Path>, l: &ApbLayer) -> Result<()> {
    let stem = stem.as_ref();
    store_tensor(sibling(stem, ".bin.btsr"), &Tensor::Bits(l.bin.clone()))?;
    store_tensor(sibling(stem, ".full.btsr"), &Tensor::Csr(l.survivors.clone()))?;
    let sidecar = LayerSidecar { alpha: l.alpha };
    std::fs::write(sibling(stem, ".json"), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

pub fn load_layer(stem: impl AsRef<Path>) -> Result<ApbLayer> {
    let stem = stem.as_ref();
    let bin = load_bits(sibling(stem, ".bin.btsr"))?;
    let survivors = load_csr(sibling(stem, ".full.btsr"))?;
    let sidecar: LayerSidecar = serde_json::from_slice(&std::fs::read(sibling(stem, ".json"))?)?;
    ApbLayer::new(bin, sidecar.alpha, survivors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apb::{apb_forward, ApbParams};
    use crate::kernels::gemm_ref_dense;

    #[test]
    fn decompose_example() {
        let a = DenseMatrix::new(1, 3, vec![1.0, -1.0, 2.5]).unwrap();
        let l = decompose_apb(&a, 1.0).unwrap();
        assert_eq!(l.bin().row(0)[0], 0b101);
        let res = l.residual();
        assert_eq!(res.triplets().collect::<Vec<_>>(), vec![(0, 2, 1.5)]);
        assert_eq!(l.mask().row(0)[0], 0b011);
        assert_eq!(l.reconstruct(), a);
    }

    #[test]
    fn fully_binary_layer_has_no_survivors() {
        let a = DenseMatrix::from_fn(3, 5, |r, c| if (r + c) % 2 == 0 { 0.5 } else { -0.5 });
        let l = decompose_apb(&a, 0.5).unwrap();
        assert_eq!(l.nnz(), 0);
        assert_eq!(l.reconstruct(), a);
    }

    #[test]
    fn forward_example() {
        let a = DenseMatrix::new(1, 3, vec![1.0, -1.0, 2.5]).unwrap();
        let b = DenseMatrix::new(3, 1, vec![2.0, 3.0, 4.0]).unwrap();
        let l = decompose_apb(&a, 1.0).unwrap();
        assert_eq!(layer_forward(&l, &b).unwrap().as_slice(), &[9.0]);
        let z = DenseMatrix::zeros(3, 2);
        assert_eq!(layer_forward(&l, &z).unwrap(), DenseMatrix::zeros(1, 2));
        assert!(layer_forward(&l, &DenseMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn reconstruction_is_exact_where_residual_rounding_is_not() {
        // 1.0000001 as alpha and an odd-mantissa survivor: (A − α) + α ≠ A in f32
        let alpha = f32::from_bits(1.0f32.to_bits() + 1);
        let mut hit = None;
        for i in 0..64u32 {
            let a = f32::from_bits(3.0f32.to_bits() + 2 * i + 1);
            if (a - alpha) + alpha != a {
                hit = Some(a);
                break;
            }
        }
        let a = hit.expect("some odd mantissa must round away");
        let m = DenseMatrix::new(1, 2, vec![a, -alpha]).unwrap();
        let l = decompose_apb(&m, alpha).unwrap();
        assert_eq!(l.reconstruct(), m);
    }

    #[test]
    fn forward_matches_dense_on_apb_output() {
        let w = DenseMatrix::from_fn(6, 40, |r, c| ((r * 40 + c) as f32 * 0.731).sin() * 2.0);
        let p = ApbParams::new(0.6, 0.5).unwrap();
        let a = apb_forward(&w, &p);
        let l = decompose_apb(&a, p.alpha() as f32).unwrap();
        assert!(l.nnz() > 0 && l.nnz() < 240);
        let b = DenseMatrix::from_fn(40, 5, |r, c| ((r + 2 * c) as f32 * 0.17).cos());
        let expected = gemm_ref_dense(&a, &b).unwrap();
        assert!(layer_forward(&l, &b).unwrap().relative_error(&expected).unwrap() < 1e-6);
        for t in [2, 4] {
            assert_eq!(
                layer_forward_with(&Executor::new(t), &l, &b).unwrap(),
                layer_forward(&l, &b).unwrap()
            );
        }
    }

    #[test]
    fn layer_validation() {
        let bin = BitMatrix::from_fn(1, 2, |_, c| c == 0);
        let ok = CsrMatrix::new(1, 2, vec![0, 1], vec![0], vec![3.0]).unwrap();
        assert!(ApbLayer::new(bin.clone(), 1.0, ok).is_ok());
        let on_alpha = CsrMatrix::new(1, 2, vec![0, 1], vec![0], vec![1.0]).unwrap();
        assert!(ApbLayer::new(bin.clone(), 1.0, on_alpha).is_err());
        let wrong_sign = CsrMatrix::new(1, 2, vec![0, 1], vec![1], vec![3.0]).unwrap();
        assert!(ApbLayer::new(bin, 1.0, wrong_sign).is_err());
    }

    #[test]
    fn store_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let a = DenseMatrix::new(2, 3, vec![0.5, -0.5, 4.0, -3.25, 0.5, 0.5]).unwrap();
        let l = decompose_apb(&a, 0.5).unwrap();
        let stem = dir.path().join("layer");
        store_layer(&stem, &l).unwrap();
        assert_eq!(load_layer(&stem).unwrap(), l);
    }
}
