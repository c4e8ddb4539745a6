//! Dense small-matrix types and batched data-parallel kernels.

mod batch;
mod exec;
mod mat;
mod reduce;
pub mod small;

pub use batch::{cholesky_batched, gemm_batched, inverse_batched, spd_inverse_batched, MatBatch, Operand, VecBatch};
pub use exec::Exec;
pub use mat::{Mat, Vector};
pub use reduce::{reduce_items, reduce_mats, reduce_scalars, reduce_vecs, CHUNK};
