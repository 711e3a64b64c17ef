//! Semi-blind baseline: Gaussian ML on the data columns plus a least-squares
//! pilot term, maximized by plain gradient ascent (no sparsity penalty).
//!
//! ```text
//! −tr(Y_Dᴴ Q⁻¹ Y_D) − (T − T_T) log|Q| − ‖H X_T − Y_T‖²_F,   Q = ρHHᴴ + I
//! ```

use crate::error::{Error, Result};
use crate::numerics::{hpd_inverse, nearest_unitary, ComplexMatrix};
use crate::scalar::Real;
use crate::sparse_ml::{thresholded_ascent, LikelihoodModel, SolveTrace, SolverConfig};
use crate::subspace::subspace_estimate;

/// Received data and known pilots of one block.
#[derive(Clone, Debug)]
pub struct SemiBlindProblem<T> {
    data: LikelihoodModel<T>,
    y_t: ComplexMatrix<T>,
    x_t: ComplexMatrix<T>,
}

#[derive(Clone, Debug)]
pub struct SemiBlindResult<T> {
    pub h_hat: ComplexMatrix<T>,
    pub trace: SolveTrace<T>,
}

impl<T: Real> SemiBlindProblem<T> {
    pub fn new(
        y_d: &ComplexMatrix<T>,
        y_t: &ComplexMatrix<T>,
        x_t: &ComplexMatrix<T>,
        rho: T,
    ) -> Result<Self> {
        let n = y_t.rows();
        if y_d.rows() != n {
            return Err(Error::InvalidDimension(format!(
                "data block has {} rows, training block has {n}",
                y_d.rows()
            )));
        }
        if x_t.cols() != y_t.cols() {
            return Err(Error::InvalidDimension(format!(
                "pilot length {} does not match {} training columns",
                x_t.cols(),
                y_t.cols()
            )));
        }
        Ok(Self {
            data: LikelihoodModel::from_gram(y_d.gram(), y_d.cols(), rho)?,
            y_t: y_t.clone(),
            x_t: x_t.clone(),
        })
    }

    pub fn users(&self) -> usize {
        self.x_t.rows()
    }

    fn check(&self, h: &ComplexMatrix<T>) -> Result<()> {
        if h.shape() != (self.y_t.rows(), self.users()) {
            return Err(Error::InvalidDimension(format!(
                "channel is {}x{}, expected {}x{}",
                h.rows(),
                h.cols(),
                self.y_t.rows(),
                self.users()
            )));
        }
        Ok(())
    }

    fn pilot_residual(&self, h: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        &h.matmul(&self.x_t) - &self.y_t
    }

    pub fn objective(&self, h: &ComplexMatrix<T>) -> Result<T> {
        self.check(h)?;
        Ok(self.data.value(h)? - self.pilot_residual(h).norm_sqr())
    }

    /// `f(h_new) − f(h_old)`, accurate even when both values agree to
    /// machine precision.
    pub fn increment(&self, h_old: &ComplexMatrix<T>, h_new: &ComplexMatrix<T>) -> Result<T> {
        self.check(h_old)?;
        self.check(h_new)?;
        let change = (h_new - h_old).matmul(&self.x_t);
        let sum = &self.pilot_residual(h_new) + &self.pilot_residual(h_old);
        let pilot: T = change
            .as_slice()
            .iter()
            .zip(sum.as_slice())
            .map(|(c, r)| (c.conj() * r).re)
            .sum();
        Ok(self.data.increment(h_old, h_new)? - pilot)
    }

    /// Negative Wirtinger gradient `−∂f/∂H*`: the blind data term of the
    /// same form as the sparse solver plus `(H X_T − Y_T) X_Tᴴ`.
    pub fn neg_gradient(&self, h: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check(h)?;
        let data = self.data.neg_gradient(h)?;
        let pilot = self.pilot_residual(h).matmul(&self.x_t.adjoint());
        Ok(&data + &pilot)
    }

    /// Least-squares channel from the pilots alone, `Y_T X_Tᴴ (X_T X_Tᴴ)⁻¹`.
    pub fn pilot_least_squares(&self) -> Result<ComplexMatrix<T>> {
        let xxh = self.x_t.gram();
        Ok(self
            .y_t
            .matmul(&self.x_t.adjoint())
            .matmul(&hpd_inverse(&xxh)?))
    }

    /// Subspace estimate of the whole block rotated onto the pilot
    /// least-squares estimate by the best unitary factor.
    pub fn aligned_initializer(&self, y_full: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        let sub = subspace_estimate(y_full, self.data.rho(), self.users())?;
        let ls = self.pilot_least_squares()?;
        let rotation = nearest_unitary(&sub.adjoint_matmul(&ls))?;
        Ok(sub.matmul(&rotation))
    }

    /// `1/(ρ σ_max(Y_D Y_Dᴴ/(T − T_T)) + σ_max(X_T X_Tᴴ))`.
    pub fn default_step(&self) -> Result<T> {
        let samples = T::count(self.data.samples().max(1));
        let data = self.data.rho() * self.data.gram_spectral_norm()? / samples;
        let pilot = crate::numerics::hermitian_eig(&self.x_t.gram())?
            .values
            .first()
            .copied()
            .unwrap_or(T::zero());
        let curvature = data + pilot;
        Ok(if curvature > T::zero() {
            curvature.recip()
        } else {
            T::one()
        })
    }

    /// Gradient ascent with the same backtracking rule as the sparse solver
    /// and no thresholding. `cfg.lambda` is ignored.
    pub fn solve(&self, init: &ComplexMatrix<T>, cfg: &SolverConfig) -> Result<SemiBlindResult<T>> {
        cfg.validate()?;
        self.check(init)?;
        let mu0 = match cfg.mu0 {
            Some(mu) => T::lit(mu),
            None => self.default_step()?,
        };
        let (h_hat, trace) = thresholded_ascent(
            init.clone(),
            mu0,
            cfg,
            |h| self.objective(h),
            |old, new| self.increment(old, new),
            |h| self.neg_gradient(h),
            |h, d, mu| h - &d.scale(mu),
            |_, d| d.max_abs(),
        )?;
        Ok(SemiBlindResult { h_hat, trace })
    }
}

pub fn semiblind_objective<T: Real>(
    h: &ComplexMatrix<T>,
    y_d: &ComplexMatrix<T>,
    y_t: &ComplexMatrix<T>,
    x_t: &ComplexMatrix<T>,
    rho: T,
) -> Result<T> {
    SemiBlindProblem::new(y_d, y_t, x_t, rho)?.objective(h)
}

pub fn semiblind_gradient<T: Real>(
    h: &ComplexMatrix<T>,
    y_d: &ComplexMatrix<T>,
    y_t: &ComplexMatrix<T>,
    x_t: &ComplexMatrix<T>,
    rho: T,
) -> Result<ComplexMatrix<T>> {
    SemiBlindProblem::new(y_d, y_t, x_t, rho)?.neg_gradient(h)
}

/// Semi-blind estimate, initialized from the pilot-aligned subspace estimate
/// of the full block `[Y_T | Y_D]`.
pub fn semiblind_solve<T: Real>(
    y_d: &ComplexMatrix<T>,
    y_t: &ComplexMatrix<T>,
    x_t: &ComplexMatrix<T>,
    rho: T,
    cfg: &SolverConfig,
) -> Result<SemiBlindResult<T>> {
    let problem = SemiBlindProblem::new(y_d, y_t, x_t, rho)?;
    let init = problem.aligned_initializer(&y_t.hstack(y_d))?;
    problem.solve(&init, cfg)
}
