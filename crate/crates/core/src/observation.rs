//! Received blocks `Y = H X + N` and orthogonal pilot sequences.

use crate::error::{Error, Result};
use crate::numerics::{sample_complex_gaussian, ComplexMatrix, RngStream};
use crate::scalar::{cplx, Real};

#[derive(Clone, Debug)]
pub struct ObservationBlock<T> {
    /// Received samples, N×T.
    pub y: ComplexMatrix<T>,
    /// Transmitted symbols, K×T. Kept for diagnostics; no estimator reads it.
    pub x: ComplexMatrix<T>,
    /// Linear SNR.
    pub rho: T,
    pub t_total: usize,
}

#[derive(Clone, Debug)]
pub struct PilotBlock<T> {
    /// K×T_T pilot matrix with `X_T X_Tᴴ = ρ T_T I`.
    pub x_t: ComplexMatrix<T>,
    pub t_train: usize,
}

/// A coherence block split into a leading training part and a data part.
#[derive(Clone, Debug)]
pub struct SemiBlindBlock<T> {
    pub pilot: PilotBlock<T>,
    /// Received training samples, N×T_T.
    pub y_t: ComplexMatrix<T>,
    /// Remaining T − T_T data columns.
    pub data: ObservationBlock<T>,
}

impl<T: Real> SemiBlindBlock<T> {
    /// All T received columns, training first.
    pub fn full_received(&self) -> ComplexMatrix<T> {
        self.y_t.hstack(&self.data.y)
    }
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if rho > T::zero() && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "SNR must be positive, got {rho}"
        )))
    }
}

fn noise<T: Real>(n: usize, t: usize, rng: Option<&mut RngStream>) -> ComplexMatrix<T> {
    match rng {
        Some(rng) => sample_complex_gaussian(n, t, T::one(), rng),
        None => ComplexMatrix::zeros(n, t),
    }
}

/// Draws `X ~ CN(0, ρ)` from `data_rng` and unit-variance noise from
/// `noise_rng` (`None` gives a noiseless block).
pub fn generate_block<T: Real>(
    h: &ComplexMatrix<T>,
    rho: T,
    t: usize,
    data_rng: &mut RngStream,
    noise_rng: Option<&mut RngStream>,
) -> Result<ObservationBlock<T>> {
    check_rho(rho)?;
    if t == 0 {
        return Err(Error::InvalidDimension(
            "block length must be at least 1".into(),
        ));
    }
    Ok(draw_block(h, rho, t, data_rng, noise_rng))
}

fn draw_block<T: Real>(
    h: &ComplexMatrix<T>,
    rho: T,
    t: usize,
    data_rng: &mut RngStream,
    noise_rng: Option<&mut RngStream>,
) -> ObservationBlock<T> {
    let x = sample_complex_gaussian(h.cols(), t, rho, data_rng);
    let y = &h.matmul(&x) + &noise(h.rows(), t, noise_rng);
    ObservationBlock {
        y,
        x,
        rho,
        t_total: t,
    }
}

/// First K rows of the T_T-point DFT, scaled to per-symbol power ρ.
pub fn pilot_sequences<T: Real>(k: usize, t_train: usize, rho: T) -> Result<PilotBlock<T>> {
    check_rho(rho)?;
    if t_train < k {
        return Err(Error::InfeasiblePilot { t_train, users: k });
    }
    let amp = rho.sqrt();
    let x_t = ComplexMatrix::from_fn(k, t_train, |u, s| {
        let phase = -T::TAU() * T::count((u * s) % t_train) / T::count(t_train);
        cplx(phase.cos() * amp, phase.sin() * amp)
    });
    Ok(PilotBlock { x_t, t_train })
}

/// Training block of length `t_train` followed by `t − t_train` data
/// columns. The noise stream feeds the training noise first, then the data
/// noise.
pub fn generate_semiblind_block<T: Real>(
    h: &ComplexMatrix<T>,
    rho: T,
    t: usize,
    t_train: usize,
    data_rng: &mut RngStream,
    mut noise_rng: Option<&mut RngStream>,
) -> Result<SemiBlindBlock<T>> {
    check_rho(rho)?;
    if t_train > t {
        return Err(Error::InvalidDimension(format!(
            "training length {t_train} exceeds block length {t}"
        )));
    }
    let pilot = pilot_sequences(h.cols(), t_train, rho)?;
    let y_t = &h.matmul(&pilot.x_t) + &noise(h.rows(), t_train, noise_rng.as_deref_mut());
    let data = draw_block(h, rho, t - t_train, data_rng, noise_rng);
    Ok(SemiBlindBlock { pilot, y_t, data })
}
