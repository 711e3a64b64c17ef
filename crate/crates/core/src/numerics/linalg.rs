use num_traits::{One, Zero};

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cplx, creal, Real, C};

/// Unitary DFT matrix, `F[p,q] = exp(-j 2π p q / n) / √n`.
pub fn dft_matrix<T: Real>(n: usize) -> Result<ComplexMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "DFT size must be at least 1".into(),
        ));
    }
    let norm = T::count(n).sqrt().recip();
    let two_pi = T::TAU();
    Ok(ComplexMatrix::from_fn(n, n, |p, q| {
        // reduce the exponent mod n before converting, keeps large products exact
        let k = (p * q) % n;
        let phase = -two_pi * T::count(k) / T::count(n);
        cplx(phase.cos() * norm, phase.sin() * norm)
    }))
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: ComplexMatrix<T>,
    pub values: Vec<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `U diag(σ) Uᴴ`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let scaled = ComplexMatrix::from_fn(self.vectors.rows(), self.vectors.cols(), |i, j| {
            self.vectors[(i, j)] * self.values[j]
        });
        scaled.matmul(&self.vectors.adjoint())
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Fails with [`Error::NotHermitian`] when `a` deviates from its adjoint by
/// more than `1e-10` relative to its largest entry.
pub fn hermitian_eig<T: Real>(a: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    if !a.is_square() {
        return Err(Error::InvalidDimension(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let tol = T::tol(1e-10);
    let asym = a.hermitian_asymmetry();
    if asym > tol * a.max_abs() {
        return Err(Error::NotHermitian {
            asymmetry: asym.to_f64_lossy(),
            tolerance: (tol * a.max_abs()).to_f64_lossy(),
        });
    }
    let n = a.rows();
    let half = T::lit(0.5);
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * half);
    let mut v = ComplexMatrix::identity(n);
    let eps = T::epsilon();

    for _sweep in 0..100 {
        let total = m.norm_sqr();
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off <= eps * eps * total || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag.is_zero() {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (mag + mag);
                let t = theta.signum() / (theta.abs() + theta.hypot(T::one()));
                let c = (T::one() + t * t).sqrt().recip();
                let s = t * c;
                let phase_conj = (apq / mag).conj();
                let vpp = creal(c);
                let vpq = creal(s);
                let vqp = phase_conj * (-s);
                let vqq = phase_conj * c;
                rotate_columns(&mut m, p, q, vpp, vpq, vqp, vqq);
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = vpp.conj() * mpk + vqp.conj() * mqk;
                    m[(q, k)] = vpq.conj() * mpk + vqq.conj() * mqk;
                }
                m[(p, q)] = C::zero();
                m[(q, p)] = C::zero();
                m[(p, p)].im = T::zero();
                m[(q, q)].im = T::zero();
                rotate_columns(&mut v, p, q, vpp, vpq, vqp, vqq);
            }
        }
    }

    let diag = m.diag_real();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps equal eigenvalues in Jacobi order
    order.sort_by(|&i, &j| {
        diag[j]
            .partial_cmp(&diag[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(HermitianEigen {
        vectors: v.select_columns(&order),
        values: order.iter().map(|&i| diag[i]).collect(),
    })
}

#[inline]
fn rotate_columns<T: Real>(
    m: &mut ComplexMatrix<T>,
    p: usize,
    q: usize,
    vpp: C<T>,
    vpq: C<T>,
    vqp: C<T>,
    vqq: C<T>,
) {
    for k in 0..m.rows() {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * vpp + mkq * vqp;
        m[(k, q)] = mkp * vpq + mkq * vqq;
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᴴ`.
pub fn cholesky<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    if !a.is_square() {
        return Err(Error::InvalidDimension(
            "Cholesky of a non-square matrix".into(),
        ));
    }
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = d.sqrt();
        l[(j, j)] = creal(ljj);
        for i in j + 1..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// Solves `L Lᴴ X = B` given the Cholesky factor `L`.
pub fn cholesky_solve<T: Real>(l: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = l.rows();
    assert_eq!(b.rows(), n);
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut acc = x[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut acc = x[(i, c)];
            for k in i + 1..n {
                acc -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)].re;
        }
    }
    x
}

/// Inverse of a Hermitian positive definite matrix.
pub fn hpd_inverse<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, &ComplexMatrix::identity(a.rows())))
}

/// `log |A|` of a Hermitian positive definite matrix.
pub fn hpd_logdet<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    let l = cholesky(a)?;
    Ok((0..a.rows()).map(|i| l[(i, i)].re.ln()).sum::<T>() * T::lit(2.0))
}

/// Inverse of a Hermitian matrix through its eigendecomposition, together
/// with the spectral condition number `σ_max / σ_min`.
pub fn hermitian_inverse_with_condition<T: Real>(
    a: &ComplexMatrix<T>,
) -> Result<(ComplexMatrix<T>, T)> {
    let eig = hermitian_eig(a)?;
    let n = a.rows();
    if n == 0 {
        return Ok((ComplexMatrix::zeros(0, 0), T::one()));
    }
    let max = eig.values[0];
    let min = eig.values[n - 1];
    let cond = if min > T::zero() {
        max / min
    } else {
        T::infinity()
    };
    let inv_diag: Vec<T> = eig
        .values
        .iter()
        .map(|&s| {
            if s.is_zero() {
                T::infinity()
            } else {
                s.recip()
            }
        })
        .collect();
    let inv = HermitianEigen {
        vectors: eig.vectors,
        values: inv_diag,
    }
    .reconstruct();
    Ok((inv, cond))
}

/// Unitary factor of the polar decomposition of a square matrix, i.e. the
/// unitary `W` minimising `‖W − M‖_F`. Rank-deficient inputs are completed
/// with an arbitrary orthonormal complement.
pub fn nearest_unitary<T: Real>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(
            "polar factor of a non-square matrix".into(),
        ));
    }
    let k = m.rows();
    let eig = hermitian_eig(&m.adjoint_matmul(m))?;
    let cutoff = eig.values.first().copied().unwrap_or(T::zero()) * T::tol(1e-12);
    let mut left: Vec<Vec<C<T>>> = Vec::with_capacity(k);
    let mut right: Vec<Vec<C<T>>> = Vec::with_capacity(k);
    for (j, &s) in eig.values.iter().enumerate() {
        if s <= cutoff || s.is_zero() {
            break;
        }
        let vj = eig.vectors.column(j);
        let u = m
            .matmul(&ComplexMatrix::column_vector(&vj))
            .scale(s.sqrt().recip());
        left.push(u.column(0));
        right.push(vj);
    }
    if left.len() < k {
        for j in left.len()..k {
            right.push(eig.vectors.column(j));
        }
        complete_orthonormal(&mut left, k);
    }
    let mut w = ComplexMatrix::zeros(k, k);
    for (u, v) in left.iter().zip(&right) {
        for i in 0..k {
            for j in 0..k {
                w[(i, j)] += u[i] * v[j].conj();
            }
        }
    }
    Ok(w)
}

/// Extends an orthonormal set to `dim` vectors by Gram–Schmidt over the
/// standard basis.
fn complete_orthonormal<T: Real>(basis: &mut Vec<Vec<C<T>>>, dim: usize) {
    for e in 0..dim {
        if basis.len() == dim {
            return;
        }
        let mut cand = vec![C::zero(); dim];
        cand[e] = C::one();
        for b in basis.iter() {
            let proj: C<T> = b.iter().zip(&cand).map(|(x, y)| x.conj() * y).sum();
            for (c, x) in cand.iter_mut().zip(b) {
                *c -= *x * proj;
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm > T::lit(1e-3) {
            basis.push(cand.into_iter().map(|z| z / norm).collect());
        }
    }
}

/// Structured view of `Q = ρ S Sᴴ + I` for a tall `S` (N×K).
///
/// Everything is expressed through the K×K core `M = ρ SᴴS + I`:
/// `Q⁻¹ = I − ρ S M⁻¹ Sᴴ`, `Q⁻¹ S = S M⁻¹` and `|Q| = |M|`.
#[derive(Clone, Debug)]
pub struct LowRankQ<T> {
    s: ComplexMatrix<T>,
    rho: T,
    core_inv: ComplexMatrix<T>,
    logdet: T,
}

impl<T: Real> LowRankQ<T> {
    pub fn new(s: &ComplexMatrix<T>, rho: T) -> Result<Self> {
        if !(rho > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "power ratio must be positive, got {rho}"
            )));
        }
        let k = s.cols();
        let core = &s.adjoint_matmul(s).scale(rho) + &ComplexMatrix::identity(k);
        let l = cholesky(&core)?;
        let logdet = (0..k).map(|i| l[(i, i)].re.ln()).sum::<T>() * T::lit(2.0);
        let core_inv = cholesky_solve(&l, &ComplexMatrix::identity(k));
        Ok(Self {
            s: s.clone(),
            rho,
            core_inv,
            logdet,
        })
    }

    /// `log |ρ S Sᴴ + I|`.
    pub fn logdet(&self) -> T {
        self.logdet
    }

    /// `(ρ SᴴS + I)⁻¹`, K×K.
    pub fn core_inverse(&self) -> &ComplexMatrix<T> {
        &self.core_inv
    }

    /// `Q⁻¹ S = S M⁻¹`.
    pub fn inv_times_s(&self) -> ComplexMatrix<T> {
        self.s.matmul(&self.core_inv)
    }

    /// `Q⁻¹ X` for any N×P matrix `X`.
    pub fn apply_inverse(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let correction = self
            .inv_times_s()
            .matmul(&self.s.adjoint_matmul(x))
            .scale(self.rho);
        x - &correction
    }

    /// `tr(Q⁻¹ G)` for a square N×N matrix `G`.
    pub fn trace_inverse_times(&self, g: &ComplexMatrix<T>) -> T {
        // tr(G) − ρ tr(M⁻¹ Sᴴ G S)
        let sgs = self.s.adjoint_matmul(&g.matmul(&self.s));
        let corr = self.core_inv.matmul(&sgs).trace();
        (g.trace() - corr * self.rho).re
    }

    /// Dense N×N `Q⁻¹`.
    pub fn dense_inverse(&self) -> ComplexMatrix<T> {
        let n = self.s.rows();
        let mut q_inv = self
            .inv_times_s()
            .matmul(&self.s.adjoint())
            .scale(-self.rho);
        for i in 0..n {
            q_inv[(i, i)] += C::one();
        }
        q_inv
    }
}

/// `(ρ S Sᴴ + I)⁻¹` through the rank-K identity.
pub fn q_inverse<T: Real>(s: &ComplexMatrix<T>, rho: T) -> Result<ComplexMatrix<T>> {
    Ok(LowRankQ::new(s, rho)?.dense_inverse())
}

/// `log |ρ S Sᴴ + I| = Σ log(1 + ρ σᵢ)` over the eigenvalues of `SᴴS`.
pub fn q_logdet<T: Real>(s: &ComplexMatrix<T>, rho: T) -> Result<T> {
    Ok(LowRankQ::new(s, rho)?.logdet())
}
