//! Low-bit matrix multiplication built from popcount kernels, plus
//! prune-binarized weight layers that pair a bit matrix with a sparse set of
//! full-precision survivors.
//!
//! * [`tensor`]: dense, bit-packed and CSR matrices and the `BTSR` container.
//! * [`transform`]: 2-bit quantization and the `{t, h, m}` plane bijection.
//! * [`kernels`]: `dot_binary`, `mbm`, the 1/1, 1/2 and 2/2 GEMMs and references.
//! * [`apb`]: the prune-binarize operator, its gradients, layers and memory model.

pub mod apb;
mod error;
pub mod kernels;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
