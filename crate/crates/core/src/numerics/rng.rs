use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;
use crate::scalar::{cplx, Real};

/// Seeded random stream identified by `(base_seed, stream_index)`.
///
/// The generator is ChaCha8 keyed by `base_seed` with the ChaCha stream id set
/// to `stream_index`, so distinct indices never share state and the same pair
/// always replays the same sequence.
#[derive(Clone, Debug)]
pub struct RngStream {
    base_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

/// Per-trial sub-streams. Trial `t` owns stream indices `4t .. 4t+3`.
pub const SUBSTREAMS_PER_TRIAL: u64 = 4;

/// Roles of the sub-streams inside one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Substream {
    Channel = 0,
    Data = 1,
    Noise = 2,
}

impl RngStream {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(stream_index);
        Self {
            base_seed,
            stream_index,
            rng,
        }
    }

    /// Sub-stream `(trial, role)` derived as stream index `4·trial + role`.
    pub fn for_trial(base_seed: u64, trial: u64, role: Substream) -> Self {
        Self::new(base_seed, trial * SUBSTREAMS_PER_TRIAL + role as u64)
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// I.i.d. circularly-symmetric complex Gaussian entries with the given
/// variance (real and imaginary parts each `variance / 2`). Entries are drawn
/// in row-major order.
pub fn sample_complex_gaussian<T: Real>(
    rows: usize,
    cols: usize,
    variance: T,
    rng: &mut RngStream,
) -> ComplexMatrix<T> {
    let sd = (variance.max(T::zero()) * T::lit(0.5)).sqrt();
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re = T::lit(rng.standard_normal());
        let im = T::lit(rng.standard_normal());
        cplx(re * sd, im * sd)
    })
}
