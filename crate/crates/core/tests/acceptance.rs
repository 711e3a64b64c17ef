//! Acceptance suite. Runs every exit criterion at its stated tolerance,
//! prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! Run with `cargo test --release --test acceptance`.

mod common;

use std::time::Instant;

use blindmimo::channel::{draw_channel, ChannelConfig, GridMode};
use blindmimo::crlb::{fisher_full, fisher_low_snr};
use blindmimo::harness::output::trials_csv;
use blindmimo::harness::{run_experiment, simulate_trial, ExperimentConfig, ExperimentOutput};
use blindmimo::metrics::Method;
use blindmimo::numerics::{hermitian_eig, RngStream};
use blindmimo::observation::{generate_block, pilot_sequences};
use blindmimo::semiblind::{semiblind_gradient, SemiBlindProblem};
use blindmimo::sparse_ml::{
    fixed_point_gap, gradient, kkt_residual_from_gradient, penalized_objective, solve_model,
    LikelihoodModel, SolverConfig,
};
use blindmimo::subspace::subspace_estimate;
use blindmimo::CMatrix;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Shared record of every end-to-end solve, for the KKT and monotonicity
/// criteria.
#[derive(Default)]
struct SolveLog {
    sparse: usize,
    semiblind: usize,
    converged: usize,
    kkt_violations: Vec<String>,
    fixed_point_violations: Vec<String>,
    non_monotone: Vec<String>,
}

impl SolveLog {
    fn sparse(
        &mut self,
        label: &str,
        model: &LikelihoodModel<f64>,
        cfg: &SolverConfig,
        k: usize,
    ) -> CMatrix {
        let res = solve_model(model, k, cfg, None).expect("sparse solve");
        self.sparse += 1;
        if !res.trace.is_monotone() {
            self.non_monotone.push(label.to_string());
        }
        if res.trace.converged {
            self.converged += 1;
            let delta = model.neg_gradient(&res.s_hat).unwrap();
            let kkt = kkt_residual_from_gradient(&res.s_hat, &delta, cfg.lambda);
            if kkt.is_nan() || kkt >= 1e-5 {
                self.kkt_violations.push(format!("{label}: {kkt:e}"));
            }
            let gap = fixed_point_gap(model, &res.s_hat, res.trace.final_step, cfg.lambda).unwrap();
            if gap.is_nan() || gap >= 1e-6 {
                self.fixed_point_violations
                    .push(format!("{label}: {gap:e}"));
            }
        }
        res.s_hat
    }

    fn semiblind(
        &mut self,
        label: &str,
        problem: &SemiBlindProblem<f64>,
        y_full: &CMatrix,
        cfg: &SolverConfig,
    ) {
        let init = problem.aligned_initializer(y_full).unwrap();
        let res = problem.solve(&init, cfg).expect("semi-blind solve");
        self.semiblind += 1;
        if !res.trace.is_monotone() {
            self.non_monotone.push(label.to_string());
        }
    }
}

fn gradient_oracle() -> Outcome {
    let (n, k, t, rho) = (6, 2, 12, 0.7);
    let mut worst_sparse = 0.0f64;
    let mut worst_semi = 0.0f64;
    for inst in 0..20u64 {
        let y = gaussian(n, t, 1000 + inst, 0);
        for p in 0..3u64 {
            let s = gaussian(n, k, 1000 + inst, 1 + p);
            let fd = finite_difference(&s, 1e-5, |x| dense_likelihood(x, &y, rho));
            worst_sparse =
                worst_sparse.max(gradient_mismatch(&fd, &gradient(&s, &y, rho).unwrap()));
        }
        let t_train = 4;
        let pilot = pilot_sequences::<f64>(k, t_train, rho).unwrap();
        let y_t = gaussian(n, t_train, 2000 + inst, 0);
        let y_d = gaussian(n, t - t_train, 2000 + inst, 1);
        for p in 0..3u64 {
            let h = gaussian(n, k, 2000 + inst, 2 + p);
            let fd = finite_difference(&h, 1e-5, |x| {
                dense_semiblind(x, &y_d, &y_t, &pilot.x_t, rho)
            });
            let g = semiblind_gradient(&h, &y_d, &y_t, &pilot.x_t, rho).unwrap();
            worst_semi = worst_semi.max(gradient_mismatch(&fd, &g));
        }
    }
    outcome(
        worst_sparse < 1e-5 && worst_semi < 1e-5,
        format!("max relative mismatch: blind {worst_sparse:.2e}, semi-blind {worst_semi:.2e} (tol 1e-5)"),
    )
}

fn fisher_oracle() -> Outcome {
    let (n, t) = (8, 50);
    let cfg = ChannelConfig::new(n, 2, 2);
    let f = blindmimo::numerics::dft_matrix::<f64>(n).unwrap();
    let mut worst = 0.0f64;
    let mut ratio_ok = true;
    let mut ratios = Vec::new();
    for inst in 0..10u64 {
        let mut rng = RngStream::new(3000 + inst, 0);
        let ch = draw_channel::<f64>(&cfg, &mut rng).unwrap();
        let rho = 0.05 + rng.uniform();
        let j = fisher_full(&ch.h, rho, t).unwrap();
        let q_inv = blindmimo::numerics::hpd_inverse(&dense_q(&ch.h, rho)).unwrap();
        for _ in 0..10 {
            let r = (rng.uniform() * (2 * n) as f64) as usize;
            let col = (rng.uniform() * (2 * n) as f64) as usize;
            let (k1, i1) = (r / n, r % n);
            let (k2, i2) = (col / n, col % n);
            // T tr(Q⁻¹ ∂Q/∂s*_{k1,i1} Q⁻¹ ∂Q/∂s_{k2,i2}) with
            // ∂Q/∂s* = ρ h f_iᴴ and ∂Q/∂s = ρ f_i hᴴ
            let h1 = CMatrix::column_vector(&ch.h.column(k1));
            let h2 = CMatrix::column_vector(&ch.h.column(k2));
            let f1 = CMatrix::column_vector(&f.column(i1));
            let f2 = CMatrix::column_vector(&f.column(i2));
            let dq_conj = h1.matmul(&f1.adjoint()).scale(rho);
            let dq = f2.matmul(&h2.adjoint()).scale(rho);
            let element = q_inv.matmul(&dq_conj).matmul(&q_inv).matmul(&dq).trace() * t as f64;
            let err = (element - j.j[(r, col)]).norm() / element.norm().max(1.0);
            worst = worst.max(err);
        }
        let rel: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&rho| {
                let full = fisher_full(&ch.h, rho, t).unwrap().j;
                let low = fisher_low_snr(&ch.h, rho, t).unwrap().j;
                (&full - &low).frobenius_norm() / full.frobenius_norm()
            })
            .collect();
        ratio_ok &= rel[0] > rel[1] && rel[1] > rel[2];
        ratios.push(rel);
    }
    outcome(
        worst < 1e-9 && ratio_ok,
        format!(
            "max element error {worst:.2e} (tol 1e-9); low-SNR relative gap strictly decreasing on all instances: {ratio_ok} (first: {:.1e}, {:.1e}, {:.1e})",
            ratios[0][0], ratios[0][1], ratios[0][2]
        ),
    )
}

fn global_optimum(log: &mut SolveLog) -> Outcome {
    let (n, t, rho, lambda) = (4, 200, 1.0, 4.0);
    let cfg = ChannelConfig::new(n, 1, 1).with_grid_mode(GridMode::OnGrid);
    let solver = SolverConfig::default().with_lambda(lambda);
    let f = blindmimo::numerics::dft_matrix::<f64>(n).unwrap();
    let mut matches = 0;
    let mut gaps = Vec::new();
    for seed in 0..20u64 {
        let ch = draw_channel::<f64>(&cfg, &mut RngStream::new(4000 + seed, 0)).unwrap();
        let block = generate_block(
            &ch.h,
            rho,
            t,
            &mut RngStream::new(4000 + seed, 1),
            Some(&mut RngStream::new(4000 + seed, 2)),
        )
        .unwrap();
        let model = LikelihoodModel::beamspace(&block.y, rho).unwrap();
        let s_hat = log.sparse(&format!("oracle seed {seed}"), &model, &solver, 1);
        let found = penalized_objective(&model, &s_hat, lambda).unwrap();
        let z = f.adjoint_matmul(&block.y);
        let oracle = single_user_global_max(&z.gram(), t, rho, lambda, seed);
        let gap = oracle - found;
        if gap.abs() < 1e-4 {
            matches += 1;
        }
        gaps.push(gap);
    }
    let worst = gaps
        .iter()
        .copied()
        .fold(0.0f64, |a, g| if g.abs() > a.abs() { g } else { a });
    outcome(
        matches >= 18,
        format!(
            "{matches}/20 seeds within 1e-4 of the enumerated optimum (need 18); largest gap optimum - found = {worst:.2e}"
        ),
    )
}

fn end_to_end_solves(log: &mut SolveLog, cfg: &ExperimentConfig, tag: &str) {
    for trial in 0..cfg.n_trials {
        let data = simulate_trial(cfg, trial).unwrap();
        let model = LikelihoodModel::beamspace(&data.y, cfg.rho()).unwrap();
        log.sparse(
            &format!("{tag} trial {trial}"),
            &model,
            &cfg.solver,
            cfg.channel.n_users,
        );
        let (pilot, y_t) = data.training.as_ref().unwrap();
        let problem = SemiBlindProblem::new(&data.y_data, y_t, &pilot.x_t, cfg.rho()).unwrap();
        log.semiblind(
            &format!("{tag} semi-blind trial {trial}"),
            &problem,
            &data.y,
            &cfg.solver,
        );
    }
}

fn kkt_criterion(log: &SolveLog) -> Outcome {
    let pass =
        log.converged > 0 && log.kkt_violations.is_empty() && log.fixed_point_violations.is_empty();
    let mut detail = format!(
        "{} of {} sparse solves converged; KKT violations {}, fixed-point violations {}",
        log.converged,
        log.sparse,
        log.kkt_violations.len(),
        log.fixed_point_violations.len()
    );
    if let Some(first) = log
        .kkt_violations
        .first()
        .or(log.fixed_point_violations.first())
    {
        detail.push_str(&format!(" (first: {first})"));
    }
    outcome(pass, detail)
}

fn monotone_criterion(log: &SolveLog) -> Outcome {
    outcome(
        log.non_monotone.is_empty(),
        format!(
            "{} of {} solves ({} blind, {} semi-blind) non-monotone{}",
            log.non_monotone.len(),
            log.sparse + log.semiblind,
            log.sparse,
            log.semiblind,
            log.non_monotone
                .first()
                .map(|s| format!(" (first: {s})"))
                .unwrap_or_default()
        ),
    )
}

fn ordering_criterion(out: &ExperimentOutput) -> Outcome {
    let med = |m| out.median_eta(m).unwrap_or(f64::NAN);
    let (sparse, semi, sub) = (
        med(Method::SparseMl),
        med(Method::SemiBlind),
        med(Method::Subspace),
    );
    let pass = sparse > semi && semi > sub && sparse - sub >= 0.05;
    let curves = &out.ccdf.curves;
    let dominated = |a: Method, b: Method| {
        curves[&a]
            .iter()
            .zip(&curves[&b])
            .filter(|(x, y)| x < y)
            .count()
    };
    outcome(
        pass,
        format!(
            "median eta sparse {sparse:.4}, semi-blind {semi:.4}, subspace {sub:.4}; sparse - subspace = {:.4} (need >= 0.05); CCDF points where sparse < semi-blind {}, sparse < subspace {} of {}",
            sparse - sub,
            dominated(Method::SparseMl, Method::SemiBlind),
            dominated(Method::SparseMl, Method::Subspace),
            out.ccdf.grid.len()
        ),
    )
}

fn bound_criterion(out: &ExperimentOutput) -> Outcome {
    let crb = &out.ccdf.curves[&Method::CrbBenchmark];
    let sparse = &out.ccdf.curves[&Method::SparseMl];
    let violations = crb.iter().zip(sparse).filter(|(b, s)| b < s).count();
    let frac = violations as f64 / crb.len() as f64;
    outcome(
        frac < 0.05,
        format!(
            "CRB below sparse at {violations} of {} grid points ({:.1}%, need < 5%)",
            crb.len(),
            100.0 * frac
        ),
    )
}

fn determinism_criterion(base: &ExperimentConfig, reference: &ExperimentOutput) -> Outcome {
    let mut lines = Vec::new();
    let mut all_equal = true;
    let expected = sorted(trials_csv(base, reference));
    for workers in [2, 4] {
        let mut cfg = base.clone();
        cfg.workers = workers;
        let out = run_experiment(&cfg).unwrap();
        let same = sorted(trials_csv(&cfg, &out)) == expected;
        all_equal &= same;
        lines.push(format!(
            "{workers} vs {} workers identical: {same}",
            base.workers
        ));
    }
    outcome(all_equal, lines.join("; "))
}

fn sorted(csv: String) -> String {
    let mut rows: Vec<&str> = csv.lines().collect();
    rows.sort_unstable();
    rows.join("\n")
}

fn subspace_identity() -> Outcome {
    let mut worst = 0.0f64;
    for inst in 0..20u64 {
        let (n, k, t) = (6, 2, 40);
        let h = gaussian(n, k, 5000 + inst, 0);
        let rho = 0.5;
        let block = generate_block(
            &h,
            rho,
            t,
            &mut RngStream::new(5000 + inst, 1),
            Some(&mut RngStream::new(5000 + inst, 2)),
        )
        .unwrap()
        .y;
        let est = subspace_estimate(&block, rho, k).unwrap();
        let lhs = est.matmul(&est.adjoint()).scale(rho * t as f64);
        let eig = hermitian_eig(&block.gram()).unwrap();
        let mut rhs = CMatrix::zeros(n, n);
        for j in 0..k {
            let w = (eig.values[j] - t as f64).max(0.0);
            let u = eig.vectors.column(j);
            for a in 0..n {
                for b in 0..n {
                    rhs[(a, b)] += u[a] * u[b].conj() * w;
                }
            }
        }
        worst = worst.max((&lhs - &rhs).max_abs() / block.gram().max_abs());
    }
    outcome(
        worst < 1e-9,
        format!("max relative deviation {worst:.2e} (tol 1e-9)"),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut log = SolveLog::default();

    results.push(("1 gradient oracle", gradient_oracle()));
    results.push(("2 Fisher oracle", fisher_oracle()));
    results.push(("3 global optimum", global_optimum(&mut log)));

    let off_grid = ExperimentConfig::default();
    let off_out = run_experiment(&off_grid).expect("off-grid experiment");
    let mut on_grid = off_grid.clone();
    on_grid.channel.grid_mode = GridMode::OnGrid;
    let on_out = run_experiment(&on_grid).expect("on-grid experiment");
    end_to_end_solves(&mut log, &off_grid, "off-grid");
    end_to_end_solves(&mut log, &on_grid, "on-grid");

    results.push(("4 KKT and fixed point", kkt_criterion(&log)));
    results.push(("5 monotone ascent", monotone_criterion(&log)));
    results.push(("6 estimator ordering", ordering_criterion(&off_out)));
    results.push(("7 bound sanity", bound_criterion(&on_out)));
    results.push(("8 determinism", determinism_criterion(&off_grid, &off_out)));
    results.push(("9 subspace identity", subspace_identity()));

    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
