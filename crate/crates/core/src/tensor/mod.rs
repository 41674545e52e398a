//! Dense, bit-packed and sparse tensors plus their on-disk container.

mod bits;
mod csr;
mod dense;
pub mod io;
mod thm;

pub use bits::{
    complement_mask, pack_signs, pack_signs_columns, unpack_signs, BitMatrix, DEFAULT_LANE_BITS,
};
pub use csr::CsrMatrix;
pub use dense::DenseMatrix;
pub use io::{load_tensor, store_tensor, Tensor};
pub use thm::ThmPlanes;
