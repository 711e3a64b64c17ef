//! Closed-form blind ML estimate from the top-K eigenpairs of `YYᴴ`.
//!
//! The Gaussian likelihood is maximised by any `H` with
//! `ρ HHᴴ + I` matching the sample covariance on its dominant K-dimensional
//! subspace. The estimate returned here is the one with orthogonal columns,
//! ordered by descending eigenvalue; every right-unitary rotation of it is
//! equally likely.

use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, hermitian_eig, ComplexMatrix};
use crate::scalar::Real;

/// How the eigenvalues are compared against the unit noise floor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenScaling {
    /// Eigenvalues of the sample covariance `YYᴴ/T`, clipped at 1:
    /// `Ĥ = ρ^{-1/2} U √[Σ/T − I]₊`. Consistent as `T → ∞`.
    #[default]
    SampleCovariance,
    /// Eigenvalues of `YYᴴ` clipped at 1 and scaled by `(Tρ)^{-1/2}`, as the
    /// closed form is usually written.
    Unnormalized,
}

/// Subspace estimate of the N×K channel from the received block.
pub fn subspace_estimate<T: Real>(
    y: &ComplexMatrix<T>,
    rho: T,
    k: usize,
) -> Result<ComplexMatrix<T>> {
    subspace_estimate_with(y, rho, k, EigenScaling::default())
}

pub fn subspace_estimate_with<T: Real>(
    y: &ComplexMatrix<T>,
    rho: T,
    k: usize,
    scaling: EigenScaling,
) -> Result<ComplexMatrix<T>> {
    subspace_from_gram(&y.gram(), y.cols(), rho, k, scaling)
}

/// Same estimate computed from a precomputed `YYᴴ` (N×N) and block length.
pub fn subspace_from_gram<T: Real>(
    gram: &ComplexMatrix<T>,
    t: usize,
    rho: T,
    k: usize,
    scaling: EigenScaling,
) -> Result<ComplexMatrix<T>> {
    let n = gram.rows();
    if k > n {
        return Err(Error::InvalidDimension(format!(
            "cannot extract {k} users from {n} antennas"
        )));
    }
    if t == 0 {
        return Err(Error::InvalidDimension("empty received block".into()));
    }
    if !(rho > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "SNR must be positive, got {rho}"
        )));
    }
    let eig = hermitian_eig(gram)?;
    let tf = T::count(t);
    let mut h = ComplexMatrix::zeros(n, k);
    for j in 0..k {
        let gain = match scaling {
            EigenScaling::SampleCovariance => {
                ((eig.values[j] / tf - T::one()).max(T::zero()) / rho).sqrt()
            }
            EigenScaling::Unnormalized => {
                ((eig.values[j] - T::one()).max(T::zero()) / (tf * rho)).sqrt()
            }
        };
        if gain > T::zero() {
            for i in 0..n {
                h[(i, j)] = eig.vectors[(i, j)] * gain;
            }
        }
    }
    Ok(h)
}

/// Subspace estimate of the beamspace coefficients: the same estimator run
/// on `Fᴴ Y`. Used as the starting point of the sparse solver.
pub fn subspace_init_beamspace<T: Real>(
    y: &ComplexMatrix<T>,
    rho: T,
    k: usize,
) -> Result<ComplexMatrix<T>> {
    let f = dft_matrix(y.rows())?;
    subspace_estimate(&f.adjoint_matmul(y), rho, k)
}

/// Beamspace initializer from a precomputed beamspace Gram `ZZᴴ`, `Z = FᴴY`.
pub(crate) fn subspace_init_from_gram<T: Real>(
    beam_gram: &ComplexMatrix<T>,
    t: usize,
    rho: T,
    k: usize,
) -> Result<ComplexMatrix<T>> {
    subspace_from_gram(beam_gram, t, rho, k, EigenScaling::default())
}
