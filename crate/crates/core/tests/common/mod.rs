//! Independent reference computations shared by the integration tests.
//!
//! Everything here is evaluated the slow, direct way (dense `N×N` inverses,
//! explicit traces) so it does not share code paths with the rank-K
//! routines under test.

#![allow(dead_code)]

use blindmimo::numerics::{dft_matrix, hpd_inverse, hpd_logdet, sample_complex_gaussian};
use blindmimo::{CMatrix, Complex64, RngStream};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64, stream: u64) -> CMatrix {
    sample_complex_gaussian(rows, cols, 1.0, &mut RngStream::new(seed, stream))
}

/// `ρ S Sᴴ + I` as a dense matrix.
pub fn dense_q(s: &CMatrix, rho: f64) -> CMatrix {
    let n = s.rows();
    let mut q = s.matmul(&s.adjoint()).scale(rho);
    for i in 0..n {
        q[(i, i)] += c(1.0, 0.0);
    }
    q
}

/// `−tr(Zᴴ Q⁻¹ Z) − T log|Q|` with `Z = Fᴴ Y`, evaluated densely.
pub fn dense_likelihood(s: &CMatrix, y: &CMatrix, rho: f64) -> f64 {
    let f = dft_matrix::<f64>(y.rows()).unwrap();
    let z = f.adjoint_matmul(y);
    let q = dense_q(s, rho);
    let fit = z
        .adjoint_matmul(&hpd_inverse(&q).unwrap().matmul(&z))
        .trace()
        .re;
    -fit - y.cols() as f64 * hpd_logdet(&q).unwrap()
}

/// Semi-blind objective evaluated densely.
pub fn dense_semiblind(h: &CMatrix, y_d: &CMatrix, y_t: &CMatrix, x_t: &CMatrix, rho: f64) -> f64 {
    let q = dense_q(h, rho);
    let fit = y_d
        .adjoint_matmul(&hpd_inverse(&q).unwrap().matmul(y_d))
        .trace()
        .re;
    let resid = &h.matmul(x_t) - y_t;
    -fit - y_d.cols() as f64 * hpd_logdet(&q).unwrap() - resid.norm_sqr()
}

/// Central finite differences of `f` along the real and imaginary part of
/// every entry. Returns `(d/d Re, d/d Im)` in row-major order.
pub fn finite_difference(x: &CMatrix, step: f64, f: impl Fn(&CMatrix) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let mut partial = [0.0; 2];
            for (slot, dir) in [c(1.0, 0.0), c(0.0, 1.0)].into_iter().enumerate() {
                let mut plus = x.clone();
                plus[(i, j)] += dir * step;
                let mut minus = x.clone();
                minus[(i, j)] -= dir * step;
                partial[slot] = (f(&plus) - f(&minus)) / (2.0 * step);
            }
            out.push((partial[0], partial[1]));
        }
    }
    out
}

/// Compares finite differences with the derivatives implied by a negative
/// Wirtinger gradient `Δ`: `dL/dRe = −2 Re Δ`, `dL/dIm = −2 Im Δ`.
/// Returns the largest deviation relative to the largest derivative.
pub fn gradient_mismatch(fd: &[(f64, f64)], neg_grad: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (&(dre, dim), g) in fd.iter().zip(neg_grad.as_slice()) {
        let (are, aim) = (-2.0 * g.re, -2.0 * g.im);
        worst = worst.max((dre - are).abs()).max((dim - aim).abs());
        scale = scale.max(are.abs()).max(aim.abs());
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

/// Single-user penalized objective in closed form:
/// `−tr G + ρ sᴴGs/(1+ρ‖s‖²) − T ln(1+ρ‖s‖²) − λ‖s‖₁`.
pub fn single_user_objective(
    gram: &CMatrix,
    t: usize,
    rho: f64,
    lambda: f64,
    s: &[Complex64],
) -> f64 {
    let n = s.len();
    let energy: f64 = s.iter().map(|z| z.norm_sqr()).sum();
    let mut quad = c(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            quad += s[i].conj() * gram[(i, j)] * s[j];
        }
    }
    let l1: f64 = s.iter().map(|z| z.norm()).sum();
    let denom = 1.0 + rho * energy;
    -gram.trace().re + rho * quad.re / denom - t as f64 * denom.ln() - lambda * l1
}

/// Nelder–Mead maximization of `f` from `start` with initial simplex size
/// `scale`. Restarts until two consecutive runs agree.
pub fn nelder_mead_max(f: &dyn Fn(&[f64]) -> f64, start: &[f64], scale: f64) -> (Vec<f64>, f64) {
    let mut best = start.to_vec();
    let mut best_val = f(&best);
    let mut size = scale;
    for _ in 0..40 {
        let (x, v) = nelder_mead_run(f, &best, size, 4000);
        let gain = v - best_val;
        if v > best_val {
            best = x;
            best_val = v;
        }
        if gain.abs() < 1e-11 * best_val.abs().max(1.0) && size < scale * 1e-3 {
            break;
        }
        size = (size * 0.3).max(scale * 1e-6);
    }
    (best, best_val)
}

fn nelder_mead_run(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    size: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += size;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| -f(p)).collect();
    let mut evals = d + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[d] - vals[0]).abs() <= 1e-14 * vals[0].abs().max(1.0) {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|k| pts[..d].iter().map(|p| p[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..d)
                .map(|k| centroid[k] + t * (pts[d][k] - centroid[k]))
                .collect()
        };
        let refl = along(-1.0);
        let fr = -f(&refl);
        evals += 1;
        if fr < vals[0] {
            let exp = along(-2.0);
            let fe = -f(&exp);
            evals += 1;
            if fe < fr {
                pts[d] = exp;
                vals[d] = fe;
            } else {
                pts[d] = refl;
                vals[d] = fr;
            }
        } else if fr < vals[d - 1] {
            pts[d] = refl;
            vals[d] = fr;
        } else {
            let contr = if fr < vals[d] {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = -f(&contr);
            evals += 1;
            if fc < vals[d].min(fr) {
                pts[d] = contr;
                vals[d] = fc;
            } else {
                for i in 1..=d {
                    pts[i] = (0..d)
                        .map(|k| pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]))
                        .collect();
                    vals[i] = -f(&pts[i]);
                }
                evals += d;
            }
        }
    }
    let (i, v) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    (pts[i].clone(), -v)
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Global maximum of the single-user penalized objective by enumerating
/// every support, maximizing on each with multi-start Nelder–Mead, and
/// refining the best point along its own direction.
pub fn single_user_global_max(gram: &CMatrix, t: usize, rho: f64, lambda: f64, seed: u64) -> f64 {
    let n = gram.rows();
    let mut best = single_user_objective(gram, t, rho, lambda, &vec![c(0.0, 0.0); n]);
    let mut rng = RngStream::new(seed, 0);
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let m = support.len();
        let embed = |x: &[f64]| -> Vec<Complex64> {
            let mut s = vec![c(0.0, 0.0); n];
            for (k, &i) in support.iter().enumerate() {
                s[i] = c(x[2 * k], x[2 * k + 1]);
            }
            s
        };
        let objective = |x: &[f64]| single_user_objective(gram, t, rho, lambda, &embed(x));

        // dominant direction of the restricted Gram, found by power iteration
        let sub = CMatrix::from_fn(m, m, |a, b| gram[(support[a], support[b])]);
        let mut v = vec![c(1.0, 0.0); m];
        for _ in 0..500 {
            let w: Vec<Complex64> = (0..m)
                .map(|a| (0..m).map(|b| sub[(a, b)] * v[b]).sum())
                .collect();
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v = w.into_iter().map(|z| z / norm).collect();
        }
        let along = |r: f64| -> Vec<f64> { v.iter().flat_map(|z| [z.re * r, z.im * r]).collect() };
        let (r_opt, _) = golden_max(|r| objective(&along(r)), 0.0, 100.0);

        let mut starts = vec![along(r_opt)];
        for _ in 0..4 {
            starts.push(
                (0..2 * m)
                    .map(|_| r_opt.max(1.0) * rng.standard_normal() / (m as f64).sqrt())
                    .collect(),
            );
        }
        for x0 in starts {
            let (x, _) = nelder_mead_max(&objective, &x0, r_opt.max(1.0) * 0.2);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let dir: Vec<f64> = x.iter().map(|v| v / norm).collect();
            let (_, refined) = golden_max(
                |r| objective(&dir.iter().map(|d| d * r).collect::<Vec<_>>()),
                0.5 * norm,
                1.5 * norm,
            );
            best = best.max(refined).max(objective(&x));
        }
    }
    best
}
