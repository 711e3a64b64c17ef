//! Complex-matrix primitives shared by all estimators.

mod linalg;
mod matrix;
mod rng;

pub use linalg::{
    cholesky, cholesky_solve, dft_matrix, hermitian_eig, hermitian_inverse_with_condition,
    hpd_inverse, hpd_logdet, nearest_unitary, q_inverse, q_logdet, HermitianEigen, LowRankQ,
};
pub use matrix::ComplexMatrix;
pub use rng::{sample_complex_gaussian, RngStream, Substream, SUBSTREAMS_PER_TRIAL};
