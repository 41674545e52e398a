//! im2col lowering shapes.

use lowbit::kernels::GemmProblem;
use lowbit::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvLayer {
    pub c_in: usize,
    pub c_out: usize,
    pub kh: usize,
    pub kw: usize,
    pub h: usize,
    pub w: usize,
    pub stride: usize,
    pub pad: usize,
}

fn out_dim(input: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = input + 2 * pad;
    if kernel > padded {
        return Err(Error::InvalidParameter(format!(
            "kernel {kernel} exceeds padded input {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// GEMM shape of a convolution after im2col: `c_out × (c_in·kh·kw) × (h_out·w_out)`.
pub fn im2col_shape(l: &ConvLayer) -> Result<GemmProblem> {
    let dims = [l.c_in, l.c_out, l.kh, l.kw, l.h, l.w, l.stride];
    if dims.contains(&0) {
        return Err(Error::InvalidParameter(format!("all dimensions must be positive: {l:?}")));
    }
    let h_out = out_dim(l.h, l.kh, l.stride, l.pad)?;
    let w_out = out_dim(l.w, l.kw, l.stride, l.pad)?;
    GemmProblem::new(l.c_out, l.c_in * l.kh * l.kw, h_out * w_out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(c_in: usize, c_out: usize, k: usize, hw: usize, stride: usize, pad: usize) -> ConvLayer {
        ConvLayer { c_in, c_out, kh: k, kw: k, h: hw, w: hw, stride, pad }
    }

    #[test]
    fn resnet_block() {
        let p = im2col_shape(&layer(64, 128, 3, 56, 1, 1)).unwrap();
        assert_eq!((p.m, p.k, p.n), (128, 576, 3136));
    }

    #[test]
    fn pointwise() {
        let p = im2col_shape(&layer(32, 16, 1, 14, 1, 0)).unwrap();
        assert_eq!((p.m, p.k, p.n), (16, 32, 196));
    }

    #[test]
    fn strided() {
        let p = im2col_shape(&layer(3, 64, 7, 224, 2, 3)).unwrap();
        assert_eq!((p.k, p.n), (147, 112 * 112));
    }

    #[test]
    fn oversized_kernel() {
        assert!(im2col_shape(&layer(1, 1, 5, 2, 1, 1)).is_err());
        assert!(im2col_shape(&layer(1, 1, 3, 4, 0, 0)).is_err());
    }
}
