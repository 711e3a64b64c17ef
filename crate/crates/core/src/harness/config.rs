//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # comment
//! antennas = 32
//! users = 2
//! paths = 3
//! snr_db = -12
//! methods = subspace,sparse,semiblind,crb
//! ```
//!
//! Recognized keys: `antennas`, `users`, `paths`, `spacing_ratio`, `grid`
//! (`on`/`off`), `snr_db`, `block_len`, `train_len`, `lambda`, `trials`,
//! `seed`, `methods`, `ccdf_grid_points`, `workers`, `out`, and the solver
//! settings `mu0` (`auto` or a number), `beta`, `max_iters`, `rel_obj_tol`,
//! `kkt_tol`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{ChannelConfig, GridMode};
use crate::error::{Error, Result};
use crate::metrics::Method;
use crate::sparse_ml::SolverConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub rho_db: f64,
    pub t_block: usize,
    pub t_train: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub methods: BTreeSet<Method>,
    pub ccdf_grid_points: usize,
    pub output_dir: PathBuf,
    /// Worker threads; does not affect results.
    pub workers: usize,
    /// Shared by the sparse and semi-blind solvers (`lambda` is ignored by
    /// the latter).
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            channel: ChannelConfig::new(32, 2, 3),
            rho_db: -12.0,
            t_block: 1000,
            t_train: 10,
            n_trials: 100,
            base_seed: 2017,
            methods: Method::ALL.into_iter().collect(),
            ccdf_grid_points: 200,
            output_dir: PathBuf::from("results"),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Linear SNR, `10^(ρ_dB/10)`.
    pub fn rho(&self) -> f64 {
        10f64.powf(self.rho_db / 10.0)
    }

    pub fn lambda(&self) -> f64 {
        self.solver.lambda
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.channel.validate().map_err(cfg_err)?;
        self.solver.validate().map_err(cfg_err)?;
        if self.n_trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !self.rho_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if self.t_block == 0 {
            return Err(Error::Config("block_len must be at least 1".into()));
        }
        if self.t_train >= self.t_block {
            return Err(Error::Config(format!(
                "train_len ({}) must be smaller than block_len ({})",
                self.t_train, self.t_block
            )));
        }
        if self.methods.contains(&Method::SemiBlind) && self.t_train < self.channel.n_users {
            return Err(Error::Config(format!(
                "semi-blind needs train_len ≥ users ({} < {})",
                self.t_train, self.channel.n_users
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.ccdf_grid_points < 2 {
            return Err(Error::Config("ccdf_grid_points must be at least 2".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.channel.n_users > self.channel.n_antennas {
            return Err(Error::Config("more users than antennas".into()));
        }
        Ok(())
    }

    /// Output label of a method; the CRB curve of off-grid channels uses a
    /// surrogate support and is labelled as approximate.
    pub fn method_label(&self, method: Method) -> &'static str {
        match (method, self.channel.grid_mode) {
            (Method::CrbBenchmark, GridMode::OffGrid) => "crb_approx",
            (m, _) => m.key(),
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "antennas" => self.channel.n_antennas = parse(key, value)?,
            "users" => self.channel.n_users = parse(key, value)?,
            "paths" => self.channel.paths_per_user = parse(key, value)?,
            "spacing_ratio" => self.channel.spacing_ratio = parse(key, value)?,
            "grid" => self.channel.grid_mode = parse_grid(value)?,
            "snr_db" => self.rho_db = parse(key, value)?,
            "block_len" => self.t_block = parse(key, value)?,
            "train_len" => self.t_train = parse(key, value)?,
            "lambda" => self.solver.lambda = parse(key, value)?,
            "trials" => self.n_trials = parse(key, value)?,
            "seed" => self.base_seed = parse(key, value)?,
            "methods" => self.methods = parse_methods(value)?,
            "ccdf_grid_points" => self.ccdf_grid_points = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "out" => self.output_dir = PathBuf::from(value),
            "mu0" => {
                self.solver.mu0 = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "beta" => self.solver.beta = parse(key, value)?,
            "max_iters" => self.solver.max_iters = parse(key, value)?,
            "rel_obj_tol" => self.solver.rel_obj_tol = parse(key, value)?,
            "kkt_tol" => self.solver.kkt_tol = parse(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown configuration key '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Applies every setting of a `key = value` document.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Settings that determine the results, one `key = value` per line.
    /// Excludes `workers` and `out`, which do not.
    pub fn result_settings(&self) -> Vec<(&'static str, String)> {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.key()).collect();
        vec![
            ("antennas", self.channel.n_antennas.to_string()),
            ("users", self.channel.n_users.to_string()),
            ("paths", self.channel.paths_per_user.to_string()),
            ("spacing_ratio", self.channel.spacing_ratio.to_string()),
            (
                "grid",
                match self.channel.grid_mode {
                    GridMode::OnGrid => "on",
                    GridMode::OffGrid => "off",
                }
                .to_string(),
            ),
            ("snr_db", self.rho_db.to_string()),
            ("block_len", self.t_block.to_string()),
            ("train_len", self.t_train.to_string()),
            ("lambda", self.solver.lambda.to_string()),
            ("trials", self.n_trials.to_string()),
            ("seed", self.base_seed.to_string()),
            ("methods", methods.join(",")),
            ("ccdf_grid_points", self.ccdf_grid_points.to_string()),
            (
                "mu0",
                self.solver
                    .mu0
                    .map_or_else(|| "auto".to_string(), |m| m.to_string()),
            ),
            ("beta", self.solver.beta.to_string()),
            ("max_iters", self.solver.max_iters.to_string()),
            ("rel_obj_tol", self.solver.rel_obj_tol.to_string()),
            ("kkt_tol", self.solver.kkt_tol.to_string()),
        ]
    }

    /// The complete resolved configuration in the config-file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.result_settings() {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "workers = {}", self.workers);
        let _ = writeln!(out, "out = {}", self.output_dir.display());
        out
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{}'", key.trim())))
}

pub fn parse_grid(value: &str) -> Result<GridMode> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "ongrid" | "on_grid" => Ok(GridMode::OnGrid),
        "off" | "offgrid" | "off_grid" => Ok(GridMode::OffGrid),
        other => Err(Error::Config(format!(
            "grid must be 'on' or 'off', got '{other}'"
        ))),
    }
}

pub fn parse_methods(value: &str) -> Result<BTreeSet<Method>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}
