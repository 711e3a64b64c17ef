//! Seeded Monte Carlo trial loop.
//!
//! Trial `t` draws its channel, data symbols and noise from the sub-streams
//! `(base_seed, 4t + role)`, so a trial's outcome does not depend on which
//! worker runs it or in what order.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{draw_channel, ChannelRealization, GridMode};
use crate::crlb::{crb_eta, largest_bins_support};
use crate::error::{Error, Result};
use crate::metrics::{ccdf, median, resolve_permutation, uniform_grid, Method, TrialReport};
use crate::numerics::{ComplexMatrix, RngStream, Substream};
use crate::observation::{generate_block, generate_semiblind_block, PilotBlock};
use crate::scalar::Real as _;
use crate::semiblind::SemiBlindProblem;
use crate::sparse_ml::{solve_model, LikelihoodModel};
use crate::subspace::subspace_estimate;

use super::config::ExperimentConfig;

/// Everything one trial observes.
#[derive(Clone, Debug)]
pub struct TrialData {
    pub channel: ChannelRealization<f64>,
    /// All T received columns (training first when pilots are present).
    pub y: ComplexMatrix<f64>,
    /// Pilot matrix and training columns, present when `t_train ≥ K`.
    pub training: Option<(PilotBlock<f64>, ComplexMatrix<f64>)>,
    /// Data columns that follow the training part.
    pub y_data: ComplexMatrix<f64>,
}

/// Draws the channel and received block of trial `trial`.
pub fn simulate_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialData> {
    let t = trial as u64;
    let mut ch_rng = RngStream::for_trial(cfg.base_seed, t, Substream::Channel);
    let mut data_rng = RngStream::for_trial(cfg.base_seed, t, Substream::Data);
    let mut noise_rng = RngStream::for_trial(cfg.base_seed, t, Substream::Noise);
    let channel = draw_channel::<f64>(&cfg.channel, &mut ch_rng)?;
    let rho = cfg.rho();
    if cfg.t_train >= cfg.channel.n_users && cfg.t_train > 0 {
        let block = generate_semiblind_block(
            &channel.h,
            rho,
            cfg.t_block,
            cfg.t_train,
            &mut data_rng,
            Some(&mut noise_rng),
        )?;
        let y = block.full_received();
        Ok(TrialData {
            channel,
            y,
            training: Some((block.pilot, block.y_t)),
            y_data: block.data.y,
        })
    } else {
        let block = generate_block(
            &channel.h,
            rho,
            cfg.t_block,
            &mut data_rng,
            Some(&mut noise_rng),
        )?;
        Ok(TrialData {
            channel,
            y: block.y.clone(),
            training: None,
            y_data: block.y,
        })
    }
}

/// Result of one method on one trial.
#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub report: TrialReport,
    /// Channel estimate with columns matched to the true users (absent for
    /// the benchmark and on failure).
    pub estimate: Option<ComplexMatrix<f64>>,
    /// Column permutation that maximized `Σ η` before matching.
    pub permutation: Option<Vec<usize>>,
}

struct Estimate {
    h_hat: Option<ComplexMatrix<f64>>,
    eta: Option<Vec<f64>>,
    iterations: usize,
    kkt: Option<f64>,
    converged: Option<bool>,
}

impl Estimate {
    fn direct(h_hat: ComplexMatrix<f64>) -> Self {
        Self {
            h_hat: Some(h_hat),
            eta: None,
            iterations: 0,
            kkt: None,
            converged: None,
        }
    }
}

fn estimate(cfg: &ExperimentConfig, data: &TrialData, method: Method) -> Result<Estimate> {
    let rho = cfg.rho();
    let k = cfg.channel.n_users;
    match method {
        Method::Subspace => Ok(Estimate::direct(subspace_estimate(&data.y, rho, k)?)),
        Method::SparseMl => {
            let model = LikelihoodModel::beamspace(&data.y, rho)?;
            let res = solve_model(&model, k, &cfg.solver, None)?;
            Ok(Estimate {
                h_hat: Some(res.h_hat),
                eta: None,
                iterations: res.trace.iterations(),
                kkt: Some(res.trace.final_kkt_residual.to_f64_lossy()),
                converged: Some(res.trace.converged),
            })
        }
        Method::SemiBlind => {
            let (pilot, y_t) = data.training.as_ref().ok_or(Error::InfeasiblePilot {
                t_train: cfg.t_train,
                users: k,
            })?;
            let problem = SemiBlindProblem::new(&data.y_data, y_t, &pilot.x_t, rho)?;
            let init = problem.aligned_initializer(&data.y)?;
            let res = problem.solve(&init, &cfg.solver)?;
            Ok(Estimate {
                h_hat: Some(res.h_hat),
                eta: None,
                iterations: res.trace.iterations(),
                kkt: Some(res.trace.final_kkt_residual.to_f64_lossy()),
                converged: Some(res.trace.converged),
            })
        }
        Method::CrbBenchmark => {
            let ch = &data.channel;
            let support = match ch.grid_mode {
                GridMode::OnGrid => ch.support.clone(),
                GridMode::OffGrid => {
                    largest_bins_support(&ch.beamspace, cfg.channel.paths_per_user)
                }
            };
            let eta = crb_eta(&ch.h, &support, rho, cfg.t_block)?;
            Ok(Estimate {
                h_hat: None,
                eta: Some(eta),
                iterations: 0,
                kkt: None,
                converged: None,
            })
        }
    }
}

/// Runs `method` on one trial. Errors are captured in the report.
pub fn run_method(
    cfg: &ExperimentConfig,
    trial: usize,
    data: &TrialData,
    method: Method,
) -> MethodOutcome {
    let start = Instant::now();
    let result = estimate(cfg, data, method).and_then(|est| {
        let (eta, matched, perm) = match (est.eta.clone(), est.h_hat.clone()) {
            (Some(eta), _) => (eta, None, None),
            (None, Some(h_hat)) => {
                let r = resolve_permutation(&data.channel.h, &h_hat)?;
                (r.eta, Some(r.estimate), Some(r.permutation))
            }
            (None, None) => unreachable!("estimator returned neither η nor an estimate"),
        };
        if let Some(bad) = eta.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("correlation {bad}")));
        }
        Ok((est, eta, matched, perm))
    });
    let wall_time = start.elapsed().as_secs_f64();
    match result {
        Ok((est, eta, matched, perm)) => MethodOutcome {
            report: TrialReport {
                trial_id: trial,
                method,
                eta_per_user: eta,
                iterations: est.iterations,
                kkt_residual: est.kkt,
                converged: est.converged,
                wall_time,
                failure: None,
            },
            estimate: matched,
            permutation: perm,
        },
        Err(e) => MethodOutcome {
            report: TrialReport {
                trial_id: trial,
                method,
                eta_per_user: Vec::new(),
                iterations: 0,
                kkt_residual: None,
                converged: None,
                wall_time,
                failure: Some(e.to_string()),
            },
            estimate: None,
            permutation: None,
        },
    }
}

/// All enabled methods on one trial, in [`Method`] order.
pub fn run_trial_detailed(cfg: &ExperimentConfig, trial: usize) -> Vec<MethodOutcome> {
    match simulate_trial(cfg, trial) {
        Ok(data) => cfg
            .methods
            .iter()
            .map(|&m| run_method(cfg, trial, &data, m))
            .collect(),
        Err(e) => cfg
            .methods
            .iter()
            .map(|&method| MethodOutcome {
                report: TrialReport {
                    trial_id: trial,
                    method,
                    eta_per_user: Vec::new(),
                    iterations: 0,
                    kkt_residual: None,
                    converged: None,
                    wall_time: 0.0,
                    failure: Some(e.to_string()),
                },
                estimate: None,
                permutation: None,
            })
            .collect(),
    }
}

pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Vec<TrialReport> {
    run_trial_detailed(cfg, trial)
        .into_iter()
        .map(|o| o.report)
        .collect()
}

/// Per-method CCDF of η over all users of all successful trials.
#[derive(Clone, Debug, PartialEq)]
pub struct CcdfTable {
    pub grid: Vec<f64>,
    pub curves: BTreeMap<Method, Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    /// Sorted by trial, then method.
    pub reports: Vec<TrialReport>,
    pub ccdf: CcdfTable,
    pub failures: BTreeMap<Method, usize>,
}

impl ExperimentOutput {
    /// η values of `method` pooled over users and successful trials.
    pub fn eta_values(&self, method: Method) -> Vec<f64> {
        self.reports
            .iter()
            .filter(|r| r.method == method && !r.failed())
            .flat_map(|r| r.eta_per_user.iter().copied())
            .collect()
    }

    pub fn median_eta(&self, method: Method) -> Option<f64> {
        median(&self.eta_values(method))
    }

    pub fn all_failed(&self) -> bool {
        self.reports.iter().all(TrialReport::failed)
    }
}

/// Runs every trial on `cfg.workers` threads and aggregates the CCDFs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let per_trial: Vec<Vec<TrialReport>> = pool.install(|| {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect()
    });
    let reports: Vec<TrialReport> = per_trial.into_iter().flatten().collect();
    Ok(aggregate(cfg, reports))
}

fn aggregate(cfg: &ExperimentConfig, reports: Vec<TrialReport>) -> ExperimentOutput {
    let grid = uniform_grid(cfg.ccdf_grid_points);
    let mut failures = BTreeMap::new();
    let mut pooled: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for &m in &cfg.methods {
        failures.insert(m, 0);
        pooled.insert(m, Vec::new());
    }
    for r in &reports {
        if r.failed() {
            *failures.entry(r.method).or_default() += 1;
        } else {
            pooled.entry(r.method).or_default().extend(&r.eta_per_user);
        }
    }
    let curves = pooled
        .into_iter()
        .map(|(m, values)| {
            let curve = ccdf(&values, &grid).unwrap_or_else(|_| vec![f64::NAN; grid.len()]);
            (m, curve)
        })
        .collect();
    ExperimentOutput {
        reports,
        ccdf: CcdfTable { grid, curves },
        failures,
    }
}
