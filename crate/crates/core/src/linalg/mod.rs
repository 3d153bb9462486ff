//! Dense linear algebra kernel used by the solver, the initializer and the baselines.

mod matrix;
mod svd;

pub use matrix::{dot, frobenius_sq, neg_part, norm2, pos_part, Matrix};
pub use svd::{triplet_residual, truncated_svd, SvdError, SvdTriplet, MAX_SWEEPS};

