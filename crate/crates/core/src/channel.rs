//! Sparse multipath ULA channels and the antenna-domain / beamspace mapping.
//!
//! User `k` sees `h_k = Σ_ℓ s_{ℓ,k} a(θ_{ℓ,k})` with the steering vector
//! `a(θ)_m = exp(j 2π (d/λ) m sin θ)`. The beamspace image is `S = Fᴴ H` for
//! the unitary DFT `F`, so `H = F S`.
//!
//! Sign conventions: the steering vector uses `exp(+j…)` and the DFT matrix
//! `exp(−j…)`. A path with spatial frequency `q/N` therefore equals `√N`
//! times DFT column `(N − q) mod N`, which is the single beamspace bin it
//! occupies.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, ComplexMatrix, RngStream};
use crate::scalar::{cplx, Real, C};

/// Whether path angles are snapped onto the DFT grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GridMode {
    OffGrid,
    OnGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub paths_per_user: usize,
    /// Element spacing over wavelength, `d/λ`.
    pub spacing_ratio: f64,
    pub grid_mode: GridMode,
}

impl ChannelConfig {
    /// Half-wavelength ULA with off-grid angles.
    pub fn new(n_antennas: usize, n_users: usize, paths_per_user: usize) -> Self {
        Self {
            n_antennas,
            n_users,
            paths_per_user,
            spacing_ratio: 0.5,
            grid_mode: GridMode::OffGrid,
        }
    }

    pub fn with_grid_mode(mut self, mode: GridMode) -> Self {
        self.grid_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 || self.n_users == 0 {
            return Err(Error::InvalidDimension(
                "need at least one antenna and one user".into(),
            ));
        }
        if self.paths_per_user == 0 || self.paths_per_user > self.n_antennas {
            return Err(Error::InvalidDimension(format!(
                "paths per user must lie in 1..={}, got {}",
                self.n_antennas, self.paths_per_user
            )));
        }
        if !(self.spacing_ratio > 0.0) || !self.spacing_ratio.is_finite() {
            return Err(Error::InvalidInput(format!(
                "spacing ratio must be positive, got {}",
                self.spacing_ratio
            )));
        }
        if self.grid_mode == GridMode::OnGrid && self.spacing_ratio > 1.0 {
            return Err(Error::Unsupported(
                "on-grid channels need spacing ratio ≤ 1".into(),
            ));
        }
        Ok(())
    }
}

/// One draw of the multi-user channel.
#[derive(Clone, Debug)]
pub struct ChannelRealization<T> {
    /// `angles[k][ℓ]`, radians in `[0, π)`.
    pub angles: Vec<Vec<T>>,
    /// `coeffs[k][ℓ]`.
    pub coeffs: Vec<Vec<C<T>>>,
    /// Antenna-domain channel, N×K.
    pub h: ComplexMatrix<T>,
    /// Beamspace coefficients `Fᴴ H`, N×K.
    pub beamspace: ComplexMatrix<T>,
    /// Flat indices `N·k + bin` of the nonzero beamspace entries, user-major
    /// and ascending. Empty for off-grid channels.
    pub support: Vec<usize>,
    pub grid_mode: GridMode,
}

impl<T: Real> ChannelRealization<T> {
    /// Assembles a realization from explicit path parameters. In on-grid mode
    /// the angles must already lie on the grid (see [`snap_to_grid`]).
    pub fn from_paths(
        cfg: &ChannelConfig,
        angles: Vec<Vec<T>>,
        coeffs: Vec<Vec<C<T>>>,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_antennas;
        let k_users = cfg.n_users;
        if angles.len() != k_users || coeffs.len() != k_users {
            return Err(Error::InvalidDimension(format!(
                "expected path lists for {k_users} users"
            )));
        }
        let spacing = T::lit(cfg.spacing_ratio);
        let mut h = ComplexMatrix::zeros(n, k_users);
        for (k, (ang, co)) in angles.iter().zip(&coeffs).enumerate() {
            if ang.len() != co.len() {
                return Err(Error::InvalidDimension(format!(
                    "user {k}: {} angles but {} coefficients",
                    ang.len(),
                    co.len()
                )));
            }
            for (&theta, &s) in ang.iter().zip(co) {
                for (m, a) in steering_vector(theta, n, spacing).into_iter().enumerate() {
                    h[(m, k)] += s * a;
                }
            }
        }
        let mut beamspace = beamspace_transform(&h)?;
        let mut support = Vec::new();
        if cfg.grid_mode == GridMode::OnGrid {
            let mut mask = vec![false; n * k_users];
            for (k, ang) in angles.iter().enumerate() {
                for &theta in ang {
                    let g = snap_to_grid(theta, n, spacing)?;
                    mask[k * n + beamspace_bin(g.grid_index, n)] = true;
                }
            }
            let tiny = T::tol(1e-10) * T::count(n).sqrt();
            for k in 0..k_users {
                for bin in 0..n {
                    let flat = k * n + bin;
                    // colliding paths can cancel; keep only genuine nonzeros
                    if mask[flat] && beamspace[(bin, k)].norm() > tiny {
                        support.push(flat);
                    } else {
                        beamspace[(bin, k)] = C::zero();
                    }
                }
            }
        }
        Ok(Self {
            angles,
            coeffs,
            h,
            beamspace,
            support,
            grid_mode: cfg.grid_mode,
        })
    }

    /// Support entries of user `k`, as beamspace bins.
    pub fn user_support(&self, k: usize) -> Vec<usize> {
        let n = self.h.rows();
        self.support
            .iter()
            .filter(|&&f| f / n == k)
            .map(|&f| f % n)
            .collect()
    }
}

/// ULA array response, `a(θ)_m = exp(j 2π (d/λ) m sin θ)`.
pub fn steering_vector<T: Real>(theta: T, n: usize, spacing_ratio: T) -> Vec<C<T>> {
    let freq = spacing_ratio * theta.sin();
    (0..n)
        .map(|m| {
            // wrap the phase to one turn before scaling by 2π
            let turns = (freq * T::count(m)).fract();
            let phase = T::TAU() * turns;
            cplx(phase.cos(), phase.sin())
        })
        .collect()
}

/// Result of snapping an angle onto the DFT grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint<T> {
    pub theta: T,
    /// Spatial-frequency bin `q`, with `(d/λ) sin θ = q / N`.
    pub grid_index: usize,
}

/// Beamspace row occupied by a path on spatial-frequency bin `q`.
#[inline]
pub fn beamspace_bin(grid_index: usize, n: usize) -> usize {
    (n - grid_index % n) % n
}

/// Moves `theta` to the nearest angle whose spatial frequency `(d/λ) sin θ`
/// is a multiple of `1/n`, staying on the same side of broadside.
pub fn snap_to_grid<T: Real>(theta: T, n: usize, spacing_ratio: T) -> Result<GridPoint<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "grid size must be at least 1".into(),
        ));
    }
    if spacing_ratio > T::one() || !(spacing_ratio > T::zero()) {
        return Err(Error::Unsupported(format!(
            "grid snapping needs 0 < spacing ratio ≤ 1, got {spacing_ratio}"
        )));
    }
    let nf = T::count(n);
    let freq = spacing_ratio * theta.sin();
    // sin θ ≥ 0 on [0, π): the reachable bins are 0..=floor(d·n)
    let max_q = (spacing_ratio * nf + T::tol(1e-12)).floor();
    let q = (freq * nf).round().max(T::zero()).min(max_q);
    let sin_snapped = (q / nf / spacing_ratio).min(T::one());
    let base = sin_snapped.asin();
    let snapped = if theta > T::FRAC_PI_2() {
        T::PI() - base
    } else {
        base
    };
    let q_usize = q.to_usize().unwrap_or(0);
    Ok(GridPoint {
        theta: snapped,
        grid_index: q_usize % n,
    })
}

/// Beamspace image `Fᴴ H`.
pub fn beamspace_transform<T: Real>(h: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let f = dft_matrix(h.rows())?;
    Ok(f.adjoint_matmul(h))
}

/// Antenna-domain image `F S`.
pub fn antenna_transform<T: Real>(s: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    Ok(dft_matrix(s.rows())?.matmul(s))
}

/// Draws AoAs uniformly on `[0, π)` and coefficients from `CN(0, 1)`.
///
/// Draw order is user-major; each path draws its angle and then the real and
/// imaginary parts of its coefficient.
pub fn draw_channel<T: Real>(
    cfg: &ChannelConfig,
    rng: &mut RngStream,
) -> Result<ChannelRealization<T>> {
    cfg.validate()?;
    let n = cfg.n_antennas;
    let spacing = T::lit(cfg.spacing_ratio);
    let half = T::lit(0.5).sqrt();
    let mut angles = Vec::with_capacity(cfg.n_users);
    let mut coeffs = Vec::with_capacity(cfg.n_users);
    for _ in 0..cfg.n_users {
        let mut ang = Vec::with_capacity(cfg.paths_per_user);
        let mut co = Vec::with_capacity(cfg.paths_per_user);
        for _ in 0..cfg.paths_per_user {
            let mut theta = T::lit(rng.uniform() * std::f64::consts::PI);
            if cfg.grid_mode == GridMode::OnGrid {
                theta = snap_to_grid(theta, n, spacing)?.theta;
            }
            let re = T::lit(rng.standard_normal());
            let im = T::lit(rng.standard_normal());
            ang.push(theta);
            co.push(cplx(re * half, im * half));
        }
        angles.push(ang);
        coeffs.push(co);
    }
    ChannelRealization::from_paths(cfg, angles, coeffs)
}
