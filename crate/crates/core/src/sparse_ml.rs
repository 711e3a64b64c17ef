//! ℓ1-regularized blind maximum likelihood on the beamspace coefficients.
//!
//! With `Z = Fᴴ Y` and `Q = ρ S Sᴴ + I` the penalized objective is
//!
//! ```text
//! L(S) − λ‖S‖₁,₁ = −tr(Zᴴ Q⁻¹ Z) − T log|Q| − λ Σ|s_nk|
//! ```
//!
//! and it is *maximized*. `Δ = −∂L/∂S*` is the negative Wirtinger gradient,
//! so `S − μΔ` is an ascent step; the proximal map of the penalty is complex
//! soft-thresholding with threshold `μλ/2`. A step that lowers the penalized
//! objective is rejected and retried from the previous iterate with `μ ← βμ`.
//! The step size never grows back.
//!
//! The data enter only through the N×N Gram `ZZᴴ`, so the per-iteration cost
//! is `O(N²K)` regardless of the block length.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, hermitian_eig, ComplexMatrix, LowRankQ};
use crate::scalar::{Real, C};
use crate::subspace::subspace_init_from_gram;

/// Gaussian covariance-fit term `−tr(Q⁻¹G) − T log|Q|` for a Gram matrix
/// `G = ZZᴴ` of `T` samples, as a function of the N×K factor `S` in
/// `Q = ρSSᴴ + I`.
#[derive(Clone, Debug)]
pub struct LikelihoodModel<T> {
    gram: ComplexMatrix<T>,
    samples: usize,
    rho: T,
}

impl<T: Real> LikelihoodModel<T> {
    /// Uses `gram` as given (no change of basis).
    pub fn from_gram(gram: ComplexMatrix<T>, samples: usize, rho: T) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::InvalidDimension("Gram matrix must be square".into()));
        }
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(Error::InvalidInput(format!(
                "SNR must be positive, got {rho}"
            )));
        }
        Ok(Self { gram, samples, rho })
    }

    /// Beamspace model `Z = FᴴY` built from the antenna-domain block.
    pub fn beamspace(y: &ComplexMatrix<T>, rho: T) -> Result<Self> {
        Self::beamspace_from_gram(&y.gram(), y.cols(), rho)
    }

    /// Beamspace model from a precomputed antenna-domain Gram `YYᴴ`.
    pub fn beamspace_from_gram(yyh: &ComplexMatrix<T>, samples: usize, rho: T) -> Result<Self> {
        let f = dft_matrix(yyh.rows())?;
        let mut g = f.adjoint_matmul(&yyh.matmul(&f));
        // restore exact Hermitian symmetry lost to rounding
        let n = g.rows();
        let half = T::lit(0.5);
        for i in 0..n {
            g[(i, i)].im = T::zero();
            for j in i + 1..n {
                let avg = (g[(i, j)] + g[(j, i)].conj()) * half;
                g[(i, j)] = avg;
                g[(j, i)] = avg.conj();
            }
        }
        Self::from_gram(g, samples, rho)
    }

    pub fn gram(&self) -> &ComplexMatrix<T> {
        &self.gram
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    fn check(&self, s: &ComplexMatrix<T>) -> Result<()> {
        if s.rows() != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "coefficient matrix has {} rows, model has dimension {}",
                s.rows(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `L(S) = −tr(Q⁻¹G) − T log|Q|`.
    pub fn value(&self, s: &ComplexMatrix<T>) -> Result<T> {
        self.check(s)?;
        let q = LowRankQ::new(s, self.rho)?;
        Ok(-q.trace_inverse_times(&self.gram) - T::count(self.samples) * q.logdet())
    }

    /// `Δ = −∂L/∂S* = −ρ Q⁻¹ G Q⁻¹ S + T ρ Q⁻¹ S`.
    pub fn neg_gradient(&self, s: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check(s)?;
        let q = LowRankQ::new(s, self.rho)?;
        let w = q.inv_times_s();
        let gw = self.gram.matmul(&w);
        let q_inv_gw = q.apply_inverse(&gw);
        let rho = self.rho;
        let t_rho = T::count(self.samples) * rho;
        Ok(ComplexMatrix::from_fn(s.rows(), s.cols(), |i, j| {
            q_inv_gw[(i, j)] * (-rho) + w[(i, j)] * t_rho
        }))
    }

    /// `L(s_new) − L(s_old)` computed from the difference `D = s_new − s_old`
    /// so that its rounding error scales with `‖D‖` instead of `|L|`.
    ///
    /// Uses `Q_old⁻¹ − Q_new⁻¹ = ρ Q_new⁻¹ (D S_oldᴴ + S_new Dᴴ) Q_old⁻¹` and
    /// `M_new − M_old = ρ (Dᴴ S_old + S_newᴴ D)` for the core `M = ρSᴴS + I`.
    pub fn increment(&self, s_old: &ComplexMatrix<T>, s_new: &ComplexMatrix<T>) -> Result<T> {
        self.check(s_old)?;
        self.check(s_new)?;
        if s_old.shape() != s_new.shape() {
            return Err(Error::InvalidDimension("iterates differ in shape".into()));
        }
        let rho = self.rho;
        let d = s_new - s_old;
        let q_old = LowRankQ::new(s_old, rho)?;
        let q_new = LowRankQ::new(s_new, rho)?;
        let a = q_old.apply_inverse(&self.gram.matmul(&q_new.apply_inverse(&d)));
        let b = q_old.apply_inverse(&self.gram.matmul(&q_new.inv_times_s()));
        let inner = |x: &ComplexMatrix<T>, y: &ComplexMatrix<T>| -> C<T> {
            x.as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(u, v)| u.conj() * v)
                .sum()
        };
        let fit = (inner(s_old, &a) + inner(&d, &b)).re * rho;

        let k = s_old.cols();
        let core_old = &s_old.adjoint_matmul(s_old).scale(rho) + &ComplexMatrix::identity(k);
        let core_step = (&d.adjoint_matmul(s_old) + &s_new.adjoint_matmul(&d)).scale(rho);
        let logdet = logdet_increment(&core_old, &core_step)?;
        Ok(fit - T::count(self.samples) * logdet)
    }

    /// Largest eigenvalue of the Gram matrix.
    pub fn gram_spectral_norm(&self) -> Result<T> {
        Ok(hermitian_eig(&self.gram)?
            .values
            .first()
            .copied()
            .unwrap_or(T::zero()))
    }
}

/// `log|A + E| − log|A|` for Hermitian positive definite `A` and Hermitian
/// `E`, as `Σ log(1 + b_i)` over the eigenvalues of `A^{-1/2} E A^{-1/2}`.
fn logdet_increment<T: Real>(a: &ComplexMatrix<T>, e: &ComplexMatrix<T>) -> Result<T> {
    let eig = hermitian_eig(a)?;
    let w = ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        eig.vectors[(i, j)] * eig.values[j].sqrt().recip()
    });
    let b = w.adjoint_matmul(&e.matmul(&w));
    let b = (&b + &b.adjoint()).scale(T::lit(0.5));
    Ok(hermitian_eig(&b)?.values.iter().map(|v| v.ln_1p()).sum())
}

/// Settings of the thresholded ascent.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// ℓ1 weight λ ≥ 0.
    pub lambda: f64,
    /// Initial step; `None` picks `1/(ρ σ_max(ZZᴴ/T))`.
    pub mu0: Option<f64>,
    /// Step shrink factor in (0, 1).
    pub beta: f64,
    pub max_iters: usize,
    pub rel_obj_tol: f64,
    pub kkt_tol: f64,
    /// Rejected steps allowed in a row before giving up.
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 4.0,
            mu0: None,
            beta: 0.5,
            max_iters: 5000,
            rel_obj_tol: 1e-20,
            kkt_tol: 1e-5,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda must be ≥ 0, got {}",
                self.lambda
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if let Some(mu) = self.mu0 {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "initial step must be positive, got {mu}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.rel_obj_tol > 0.0) || !(self.kkt_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopReason {
    #[default]
    KktTolerance,
    ObjectiveStalled,
    MaxIterations,
    BacktrackLimit,
}

#[derive(Clone, Debug, Default)]
pub struct SolveTrace<T> {
    /// Penalized objective at the initial point, then after every accepted
    /// step as the previous value plus the exactly evaluated increment.
    pub objective: Vec<T>,
    /// Step size used by every accepted step.
    pub step_sizes: Vec<T>,
    pub n_backtracks: usize,
    /// Step size in effect when the solve finished.
    pub final_step: T,
    pub final_kkt_residual: T,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl<T: Real> SolveTrace<T> {
    pub fn iterations(&self) -> usize {
        self.step_sizes.len()
    }

    pub fn final_objective(&self) -> Option<T> {
        self.objective.last().copied()
    }

    /// True when no accepted step decreased the objective.
    pub fn is_monotone(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Beamspace estimate together with its antenna-domain image.
#[derive(Clone, Debug)]
pub struct EstimateResult<T> {
    pub s_hat: ComplexMatrix<T>,
    pub h_hat: ComplexMatrix<T>,
    pub trace: SolveTrace<T>,
}

/// Penalized objective `L(S) − λ‖S‖₁,₁` for the received block `y`.
pub fn objective<T: Real>(
    s: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    rho: T,
    lambda: T,
) -> Result<T> {
    let model = LikelihoodModel::beamspace(y, rho)?;
    penalized_objective(&model, s, lambda)
}

pub fn penalized_objective<T: Real>(
    model: &LikelihoodModel<T>,
    s: &ComplexMatrix<T>,
    lambda: T,
) -> Result<T> {
    Ok(model.value(s)? - lambda * s.l11_norm())
}

/// Change of the penalized objective from `s_old` to `s_new`, accurate
/// even when both values agree to machine precision.
pub fn penalized_increment<T: Real>(
    model: &LikelihoodModel<T>,
    s_old: &ComplexMatrix<T>,
    s_new: &ComplexMatrix<T>,
    lambda: T,
) -> Result<T> {
    let l1: T = s_old
        .as_slice()
        .iter()
        .zip(s_new.as_slice())
        .map(|(a, b)| b.norm() - a.norm())
        .sum();
    Ok(model.increment(s_old, s_new)? - lambda * l1)
}

/// Negative Wirtinger gradient `Δ` of the unpenalized likelihood.
pub fn gradient<T: Real>(
    s: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    rho: T,
) -> Result<ComplexMatrix<T>> {
    LikelihoodModel::beamspace(y, rho)?.neg_gradient(s)
}

/// Complex soft-thresholding: keeps each entry's phase and shrinks its
/// magnitude by `tau`, mapping `|z| ≤ tau` to exactly zero.
pub fn soft_threshold<T: Real>(m: &ComplexMatrix<T>, tau: T) -> ComplexMatrix<T> {
    m.map(|z| shrink(z, tau))
}

#[inline]
fn shrink<T: Real>(z: C<T>, tau: T) -> C<T> {
    let mag = z.norm();
    if mag <= tau {
        C::zero()
    } else if tau.is_zero() {
        z
    } else {
        z * ((mag - tau) / mag)
    }
}

/// One thresholded step `soft_threshold(S − μΔ, μλ/2)`. Its fixed points
/// are exactly the first-order stationary points of the penalized problem.
pub fn threshold_step<T: Real>(
    s: &ComplexMatrix<T>,
    delta: &ComplexMatrix<T>,
    mu: T,
    lambda: T,
) -> ComplexMatrix<T> {
    let tau = mu * lambda * T::lit(0.5);
    ComplexMatrix::from_fn(s.rows(), s.cols(), |i, j| {
        shrink(s[(i, j)] - delta[(i, j)] * mu, tau)
    })
}

/// KKT residual from a precomputed `Δ`:
/// on nonzero entries `|−Δ − (λ/2) e^{j∠s}|`, on zero entries
/// `max(|Δ| − λ/2, 0)`, maximized over all entries.
pub fn kkt_residual_from_gradient<T: Real>(
    s: &ComplexMatrix<T>,
    delta: &ComplexMatrix<T>,
    lambda: T,
) -> T {
    let half = lambda * T::lit(0.5);
    s.as_slice()
        .iter()
        .zip(delta.as_slice())
        .map(|(&z, &d)| {
            if z.is_zero() {
                (d.norm() - half).max(T::zero())
            } else {
                let phase = z / z.norm();
                (-d - phase * half).norm()
            }
        })
        .fold(T::zero(), T::max)
}

/// First-order optimality residual of `S` for the penalized problem.
pub fn kkt_residual<T: Real>(
    s: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    rho: T,
    lambda: T,
) -> Result<T> {
    let model = LikelihoodModel::beamspace(y, rho)?;
    Ok(kkt_residual_from_gradient(
        s,
        &model.neg_gradient(s)?,
        lambda,
    ))
}

/// Relative fixed-point gap `‖S − step(S)‖_F / max(1, ‖S‖_F)`.
pub fn fixed_point_gap<T: Real>(
    model: &LikelihoodModel<T>,
    s: &ComplexMatrix<T>,
    mu: T,
    lambda: T,
) -> Result<T> {
    let delta = model.neg_gradient(s)?;
    let next = threshold_step(s, &delta, mu, lambda);
    Ok((&next - s).frobenius_norm() / s.frobenius_norm().max(T::one()))
}

/// Default initial step `1/(ρ σ_max(G/T))`.
pub fn default_step<T: Real>(model: &LikelihoodModel<T>) -> Result<T> {
    let top = model.gram_spectral_norm()? / T::count(model.samples());
    let curvature = model.rho() * top;
    Ok(if curvature > T::zero() {
        curvature.recip()
    } else {
        T::one()
    })
}

/// Blind sparse estimate from the received block. `init` defaults to the
/// beamspace subspace estimate.
pub fn solve<T: Real>(
    y: &ComplexMatrix<T>,
    rho: T,
    k: usize,
    cfg: &SolverConfig,
    init: Option<&ComplexMatrix<T>>,
) -> Result<EstimateResult<T>> {
    let model = LikelihoodModel::beamspace(y, rho)?;
    solve_model(&model, k, cfg, init)
}

/// Solve on a prebuilt beamspace model, e.g. one sharing its Gram with
/// other estimators.
pub fn solve_model<T: Real>(
    model: &LikelihoodModel<T>,
    k: usize,
    cfg: &SolverConfig,
    init: Option<&ComplexMatrix<T>>,
) -> Result<EstimateResult<T>> {
    cfg.validate()?;
    let s0 = match init {
        Some(s) => {
            if s.shape() != (model.dim(), k) {
                return Err(Error::InvalidDimension(format!(
                    "initial point is {}x{}, expected {}x{k}",
                    s.rows(),
                    s.cols(),
                    model.dim()
                )));
            }
            s.clone()
        }
        None => subspace_init_from_gram(model.gram(), model.samples(), model.rho(), k)?,
    };
    let lambda = T::lit(cfg.lambda);
    let mu0 = match cfg.mu0 {
        Some(mu) => T::lit(mu),
        None => default_step(model)?,
    };
    let (s_hat, trace) = thresholded_ascent(
        s0,
        mu0,
        cfg,
        |s| penalized_objective(model, s, lambda),
        |old, new| penalized_increment(model, old, new, lambda),
        |s| model.neg_gradient(s),
        |s, d, mu| threshold_step(s, d, mu, lambda),
        |s, d| kkt_residual_from_gradient(s, d, lambda),
    )?;
    let h_hat = dft_matrix(model.dim())?.matmul(&s_hat);
    Ok(EstimateResult {
        s_hat,
        h_hat,
        trace,
    })
}

/// Backtracking proximal ascent shared by the blind and semi-blind solvers.
#[allow(clippy::too_many_arguments)]
pub(crate) fn thresholded_ascent<T: Real>(
    mut s: ComplexMatrix<T>,
    mu0: T,
    cfg: &SolverConfig,
    objective: impl Fn(&ComplexMatrix<T>) -> Result<T>,
    increment: impl Fn(&ComplexMatrix<T>, &ComplexMatrix<T>) -> Result<T>,
    neg_gradient: impl Fn(&ComplexMatrix<T>) -> Result<ComplexMatrix<T>>,
    step: impl Fn(&ComplexMatrix<T>, &ComplexMatrix<T>, T) -> ComplexMatrix<T>,
    residual: impl Fn(&ComplexMatrix<T>, &ComplexMatrix<T>) -> T,
) -> Result<(ComplexMatrix<T>, SolveTrace<T>)> {
    let beta = T::lit(cfg.beta);
    let rel_tol = T::lit(cfg.rel_obj_tol);
    let kkt_tol = T::lit(cfg.kkt_tol);
    let mut trace = SolveTrace::default();
    let mut mu = mu0;

    let fail = |reason: &str, trace: &SolveTrace<T>| Error::NumericalFailure {
        reason: reason.to_string(),
        iterations: trace.iterations(),
        objective_trace: trace.objective.iter().map(|v| v.to_f64_lossy()).collect(),
    };

    let mut f = objective(&s)?;
    if !f.is_finite() {
        return Err(fail("non-finite objective at the initial point", &trace));
    }
    trace.objective.push(f);
    let mut delta = neg_gradient(&s)?;
    let mut kkt = residual(&s, &delta);
    trace.stop_reason = StopReason::MaxIterations;

    'outer: for _ in 0..cfg.max_iters {
        if kkt < kkt_tol {
            trace.stop_reason = StopReason::KktTolerance;
            break;
        }
        let mut rejected = 0;
        let (cand, gain) = loop {
            let cand = step(&s, &delta, mu);
            let gain = increment(&s, &cand)?;
            if gain.is_nan() {
                return Err(fail("objective evaluated to NaN", &trace));
            }
            if gain >= T::zero() {
                break (cand, gain);
            }
            mu *= beta;
            rejected += 1;
            trace.n_backtracks += 1;
            if rejected >= cfg.max_backtracks {
                trace.stop_reason = StopReason::BacktrackLimit;
                break 'outer;
            }
        };
        let f_cand = f + gain;
        if !f_cand.is_finite() {
            return Err(fail("objective diverged", &trace));
        }
        let change = gain / f.abs().max(T::one());
        s = cand;
        f = f_cand;
        trace.objective.push(f);
        trace.step_sizes.push(mu);
        delta = neg_gradient(&s)?;
        kkt = residual(&s, &delta);
        if kkt < kkt_tol {
            trace.stop_reason = StopReason::KktTolerance;
            break;
        }
        if change < rel_tol {
            trace.stop_reason = StopReason::ObjectiveStalled;
            break;
        }
    }
    trace.final_kkt_residual = kkt;
    trace.converged = kkt < kkt_tol;
    trace.final_step = mu;
    Ok((s, trace))
}
