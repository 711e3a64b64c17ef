//! Blind estimation of sparse multi-user massive-MIMO channels.
//!
//! The uplink block `Y = H X + N` is observed without pilots. Writing the
//! channel in beamspace, `H = F S` with the unitary DFT `F`, the estimator
//! maximizes the Gaussian likelihood of `Y` minus an ℓ1 penalty on `S` by
//! thresholded gradient ascent ([`sparse_ml`]). The crate also provides the
//! eigendecomposition baseline ([`subspace`]), a pilot-aided semi-blind
//! baseline ([`semiblind`]), the clairvoyant Fisher-information benchmark
//! ([`crlb`]) and a seeded Monte Carlo harness ([`harness`]).
//!
//! All numerical routines are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the harness uses.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod crlb;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod observation;
pub mod scalar;
pub mod semiblind;
pub mod sparse_ml;
pub mod subspace;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, RngStream};
pub use scalar::{Real, C};

/// Complex `f64` scalar.
pub type Complex64 = C<f64>;
/// Complex `f64` matrix.
pub type CMatrix = numerics::ComplexMatrix<f64>;
/// Complex `f32` matrix.
pub type CMatrix32 = numerics::ComplexMatrix<f32>;
pub type ChannelRealization = channel::ChannelRealization<f64>;
pub type ObservationBlock = observation::ObservationBlock<f64>;
pub type EstimateResult = sparse_ml::EstimateResult<f64>;
pub type SolveTrace = sparse_ml::SolveTrace<f64>;
pub type FisherMatrix = crlb::FisherMatrix<f64>;
