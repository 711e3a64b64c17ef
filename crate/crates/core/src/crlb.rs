//! Clairvoyant Fisher information for the beamspace coefficients and the
//! CRB-based correlation benchmark.
//!
//! Entry `(N k + i, N k' + i')` of the Fisher matrix is
//! `T tr(Q⁻¹ ∂Q/∂s*_{k,i} Q⁻¹ ∂Q/∂s_{k',i'}) = T ρ² [FᴴQ⁻¹F]_{i,i'} [HᴴQ⁻¹H]_{k',k}`,
//! i.e. `J = T ρ² (HᴴQ⁻¹H)ᵀ ⊗ (FᴴQ⁻¹F)` with `Q = ρHHᴴ + I`.

use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, hermitian_inverse_with_condition, ComplexMatrix, LowRankQ};
use crate::scalar::Real;

/// Condition number above which the reduced Fisher matrix is treated as
/// singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct FisherMatrix<T> {
    pub j: ComplexMatrix<T>,
    /// Row/column `r` refers to `(user, beamspace bin) = index_map[r]`.
    pub index_map: Vec<(usize, usize)>,
}

impl<T: Real> FisherMatrix<T> {
    pub fn dim(&self) -> usize {
        self.j.rows()
    }
}

fn check_args<T: Real>(rho: T, t: usize) -> Result<()> {
    if !(rho > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "SNR must be positive, got {rho}"
        )));
    }
    if t == 0 {
        return Err(Error::InvalidDimension(
            "block length must be at least 1".into(),
        ));
    }
    Ok(())
}

fn full_index_map(n: usize, k: usize) -> Vec<(usize, usize)> {
    (0..n * k).map(|f| (f / n, f % n)).collect()
}

/// Full NK×NK Fisher matrix.
pub fn fisher_full<T: Real>(h: &ComplexMatrix<T>, rho: T, t: usize) -> Result<FisherMatrix<T>> {
    check_args(rho, t)?;
    let (n, k) = h.shape();
    let q_inv = LowRankQ::new(h, rho)?.dense_inverse();
    let user_factor = h.adjoint_matmul(&q_inv.matmul(h)).transpose();
    let f = dft_matrix(n)?;
    let bin_factor = f.adjoint_matmul(&q_inv.matmul(&f));
    let scale = T::count(t) * rho * rho;
    Ok(FisherMatrix {
        j: user_factor.kron(&bin_factor).scale(scale),
        index_map: full_index_map(n, k),
    })
}

/// Low-SNR form `T ρ² (HᴴH)ᵀ ⊗ I_N`, obtained by setting `Q = I`.
pub fn fisher_low_snr<T: Real>(h: &ComplexMatrix<T>, rho: T, t: usize) -> Result<FisherMatrix<T>> {
    check_args(rho, t)?;
    let (n, k) = h.shape();
    let user_factor = h.adjoint_matmul(h).transpose();
    Ok(FisherMatrix {
        j: user_factor
            .kron(&ComplexMatrix::identity(n))
            .scale(T::count(t) * rho * rho),
        index_map: full_index_map(n, k),
    })
}

/// Rows and columns of `j` selected by `support` (indices into `j`).
pub fn fisher_reduced<T: Real>(j: &FisherMatrix<T>, support: &[usize]) -> Result<FisherMatrix<T>> {
    if support.is_empty() {
        return Err(Error::InvalidSupport("empty support".into()));
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= j.dim()) {
        return Err(Error::InvalidSupport(format!(
            "index {bad} out of range for a {}-dimensional Fisher matrix",
            j.dim()
        )));
    }
    Ok(FisherMatrix {
        j: j.j.submatrix(support, support),
        index_map: support.iter().map(|&i| j.index_map[i]).collect(),
    })
}

/// Correlation benchmark per user,
/// `η_k = 1/√(1 + Σ_{i∈𝒮_k} [J̃⁻¹]_{ii} / ‖h_k‖²)`.
///
/// `support` holds flat indices `N k + bin`, strictly ascending (hence
/// user-major); every user needs at least one entry.
pub fn crb_eta<T: Real>(
    h: &ComplexMatrix<T>,
    support: &[usize],
    rho: T,
    t: usize,
) -> Result<Vec<T>> {
    let (n, k) = h.shape();
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSupport(
            "support must be strictly ascending".into(),
        ));
    }
    let full = fisher_full(h, rho, t)?;
    let reduced = fisher_reduced(&full, support)?;
    let (inv, cond) = hermitian_inverse_with_condition(&reduced.j)?;
    if !(cond <= T::lit(MAX_CONDITION)) {
        return Err(Error::UnidentifiableSupport {
            condition: cond.to_f64_lossy(),
        });
    }
    let mut error_power = vec![T::zero(); k];
    let mut entries = vec![0usize; k];
    for (r, &flat) in support.iter().enumerate() {
        let user = flat / n;
        error_power[user] += inv[(r, r)].re;
        entries[user] += 1;
    }
    (0..k)
        .map(|user| {
            if entries[user] == 0 {
                return Err(Error::InvalidSupport(format!(
                    "user {user} has no support entries"
                )));
            }
            let energy: T = h.column(user).iter().map(|z| z.norm_sqr()).sum();
            if !(energy > T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "user {user} has a zero channel"
                )));
            }
            Ok((T::one() + error_power[user] / energy).sqrt().recip())
        })
        .collect()
}

/// The `per_user` largest-magnitude beamspace bins of every user, as flat
/// ascending indices. Stand-in support for channels that are not exactly
/// sparse.
pub fn largest_bins_support<T: Real>(beamspace: &ComplexMatrix<T>, per_user: usize) -> Vec<usize> {
    let (n, k) = beamspace.shape();
    let mut support = Vec::with_capacity(per_user * k);
    for user in 0..k {
        let mut bins: Vec<usize> = (0..n).collect();
        bins.sort_by(|&a, &b| {
            beamspace[(b, user)]
                .norm()
                .partial_cmp(&beamspace[(a, user)].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut top: Vec<usize> = bins.into_iter().take(per_user.min(n)).collect();
        top.sort_unstable();
        support.extend(top.into_iter().map(|bin| user * n + bin));
    }
    support
}
