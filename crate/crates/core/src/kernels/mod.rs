//! Bitwise dot products and GEMMs (1/1, 1/2, 2/2), the binary × real
//! routine, dense/sparse reference multiplies and the peak-throughput model.
//!
//! The second GEMM operand is always column-packed: an `N × K` bit matrix (or
//! set of planes) whose row `c` holds column `c` of the logical `K × N`
//! operand, so the inner loop streams contiguous words of both operands.

mod bitops;
mod gemm;
mod reference;
mod simd;
mod tpp;

use crate::error::{Error, Result};

pub use bitops::{dot_binary, mbm, xor_and_popcount, xor_popcount, Counts2x2};
pub use gemm::{gemm_1x1, gemm_1x2, gemm_2x2, Accumulators, Executor};
pub use reference::{dot_1x32_reference, gemm_1x32, gemm_ref_dense, spmm_csr};
pub use simd::backend;
pub use tpp::{tpp_model, Precision, TppModel, TppReport, BINARY_UPDATE_INSTRUCTIONS};

/// Largest shared dimension the `i32` accumulators accept (`|9·mbm| ≤ 9K`).
pub const MAX_K: usize = 1 << 20;

/// GEMM shape: `M × K` times `K × N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GemmProblem {
    pub m: usize,
    pub k: usize,
    pub n: usize,
}

impl GemmProblem {
    pub fn new(m: usize, k: usize, n: usize) -> Result<Self> {
        if m == 0 || k == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!("GEMM dims must be positive: {m}x{k}x{n}")));
        }
        if k > MAX_K {
            return Err(Error::AccumulatorBound { k, max: MAX_K });
        }
        Ok(Self { m, k, n })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    /// Multiply-accumulate updates in one product.
    pub fn updates(&self) -> f64 {
        self.m as f64 * self.k as f64 * self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_validation() {
        assert!(GemmProblem::new(0, 1, 1).is_err());
        assert!(GemmProblem::new(1, MAX_K + 1, 1).is_err());
        assert_eq!(GemmProblem::square(4).unwrap().updates(), 64.0);
    }
}
