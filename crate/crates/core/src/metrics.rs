//! Correlation metric, permutation resolution and empirical CCDFs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::scalar::{Real, C};

/// Estimators compared by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Subspace,
    SparseMl,
    SemiBlind,
    CrbBenchmark,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Subspace,
        Method::SparseMl,
        Method::SemiBlind,
        Method::CrbBenchmark,
    ];

    /// Name used on the command line and in config files.
    pub fn key(self) -> &'static str {
        match self {
            Method::Subspace => "subspace",
            Method::SparseMl => "sparse",
            Method::SemiBlind => "semiblind",
            Method::CrbBenchmark => "crb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "subspace" => Ok(Method::Subspace),
            "sparse" | "sparse_ml" | "sparseml" => Ok(Method::SparseMl),
            "semiblind" | "semi-blind" | "semi_blind" => Ok(Method::SemiBlind),
            "crb" | "crb_benchmark" => Ok(Method::CrbBenchmark),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Outcome of one method on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport {
    pub trial_id: usize,
    pub method: Method,
    /// One η per user; empty when the method failed.
    pub eta_per_user: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: Option<f64>,
    /// Whether an iterative method met its KKT tolerance.
    pub converged: Option<bool>,
    pub wall_time: f64,
    pub failure: Option<String>,
}

impl TrialReport {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// `|hᴴĥ| / (‖h‖‖ĥ‖)`, defined as 0 for a zero estimate.
pub fn correlation<T: Real>(h_true: &[C<T>], h_est: &[C<T>]) -> Result<T> {
    if h_true.len() != h_est.len() {
        return Err(Error::InvalidDimension(format!(
            "vectors of length {} and {}",
            h_true.len(),
            h_est.len()
        )));
    }
    let nt: T = h_true.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if !(nt > T::zero()) {
        return Err(Error::InvalidInput("true channel has zero norm".into()));
    }
    let ne: T = h_est.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if ne.is_zero() {
        return Ok(T::zero());
    }
    let inner: C<T> = h_true.iter().zip(h_est).map(|(a, b)| a.conj() * b).sum();
    Ok((inner.norm() / (nt * ne)).min(T::one()))
}

/// `eta[k][j]` = correlation of true user `k` with estimated column `j`.
pub fn correlation_table<T: Real>(
    h_true: &ComplexMatrix<T>,
    h_est: &ComplexMatrix<T>,
) -> Result<Vec<Vec<T>>> {
    if h_true.shape() != h_est.shape() {
        return Err(Error::InvalidDimension(
            "true and estimated channels differ in shape".into(),
        ));
    }
    let est_cols: Vec<_> = (0..h_est.cols()).map(|j| h_est.column(j)).collect();
    (0..h_true.cols())
        .map(|k| {
            let hk = h_true.column(k);
            est_cols.iter().map(|e| correlation(&hk, e)).collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Resolved<T> {
    /// Estimate with column `k` assigned to true user `k`.
    pub estimate: ComplexMatrix<T>,
    /// `permutation[k]` is the estimated column assigned to user `k`.
    pub permutation: Vec<usize>,
    pub eta: Vec<T>,
}

/// Largest K for which every permutation is enumerated.
pub const EXHAUSTIVE_MAX_USERS: usize = 8;

/// Column assignment maximizing `Σ_k η_k`. Exhaustive up to
/// [`EXHAUSTIVE_MAX_USERS`] users, linear assignment beyond. Ties keep the
/// lexicographically first permutation, so the identity wins when it is
/// optimal.
pub fn resolve_permutation<T: Real>(
    h_true: &ComplexMatrix<T>,
    h_est: &ComplexMatrix<T>,
) -> Result<Resolved<T>> {
    let table = correlation_table(h_true, h_est)?;
    let weights: Vec<Vec<f64>> = table
        .iter()
        .map(|row| row.iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    let permutation = if weights.len() <= EXHAUSTIVE_MAX_USERS {
        best_permutation_exhaustive(&weights)
    } else {
        max_weight_assignment(&weights)
    };
    let eta = permutation
        .iter()
        .enumerate()
        .map(|(k, &j)| table[k][j])
        .collect();
    Ok(Resolved {
        estimate: h_est.select_columns(&permutation),
        permutation,
        eta,
    })
}

/// Brute force over all K! assignments.
pub fn best_permutation_exhaustive(weights: &[Vec<f64>]) -> Vec<usize> {
    fn recurse(
        w: &[Vec<f64>],
        row: usize,
        used: &mut [bool],
        current: &mut Vec<usize>,
        score: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        if row == w.len() {
            if score > best.0 {
                *best = (score, current.clone());
            }
            return;
        }
        for j in 0..w.len() {
            if !used[j] {
                used[j] = true;
                current.push(j);
                recurse(w, row + 1, used, current, score + w[row][j], best);
                current.pop();
                used[j] = false;
            }
        }
    }
    let k = weights.len();
    let mut best = (f64::NEG_INFINITY, (0..k).collect());
    recurse(
        weights,
        0,
        &mut vec![false; k],
        &mut Vec::with_capacity(k),
        0.0,
        &mut best,
    );
    best.1
}

/// Maximum-weight perfect matching of a square weight table (Hungarian
/// algorithm with potentials, `O(K³)`). Returns `assignment[row] = column`.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    let inf = f64::INFINITY;
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Fraction of `values` that are `≥ g` for every grid point `g`.
pub fn ccdf(values: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("CCDF of an empty sample".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("CCDF grid must be ascending".into()));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&g| {
            let below = sorted.partition_point(|&v| v < g);
            (sorted.len() - below) as f64 / n
        })
        .collect())
}

/// `points` equally spaced values on `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Sample median (mean of the middle pair for even counts).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
