//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

use crate::error::{Error, Result};

use super::config::{parse_grid, parse_methods, ExperimentConfig};
use super::experiment::run_experiment;
use super::output::{summary, write_outputs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ALL_FAILED: i32 = 2;

/// Monte Carlo comparison of blind sparse, subspace and semi-blind channel
/// estimators for multi-user massive MIMO.
#[derive(Parser, Debug, Default)]
#[command(name = "blindmimo", version)]
pub struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Number of base-station antennas N.
    #[arg(long, value_name = "N")]
    pub antennas: Option<usize>,
    /// Number of users K.
    #[arg(long, value_name = "K")]
    pub users: Option<usize>,
    /// Propagation paths per user L.
    #[arg(long, value_name = "L")]
    pub paths: Option<usize>,
    /// Per-user SNR in dB.
    #[arg(long = "snr-db", value_name = "R", allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Coherence block length T.
    #[arg(long = "block-len", value_name = "T")]
    pub block_len: Option<usize>,
    /// Pilot length of the semi-blind baseline.
    #[arg(long = "train-len", value_name = "TT")]
    pub train_len: Option<usize>,
    /// Sparsity weight of the ℓ1 penalty.
    #[arg(long, value_name = "L1")]
    pub lambda: Option<f64>,
    /// Number of Monte Carlo trials.
    #[arg(long, value_name = "M")]
    pub trials: Option<usize>,
    /// Base RNG seed.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Path angles on the DFT grid (`on`) or continuous (`off`).
    #[arg(long, value_name = "on|off")]
    pub grid: Option<String>,
    /// Comma-separated subset of subspace,sparse,semiblind,crb.
    #[arg(long, value_name = "LIST")]
    pub methods: Option<String>,
    /// Worker threads.
    #[arg(long, value_name = "W")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Cli {
    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(v) = self.antennas {
            cfg.channel.n_antennas = v;
        }
        if let Some(v) = self.users {
            cfg.channel.n_users = v;
        }
        if let Some(v) = self.paths {
            cfg.channel.paths_per_user = v;
        }
        if let Some(v) = self.snr_db {
            cfg.rho_db = v;
        }
        if let Some(v) = self.block_len {
            cfg.t_block = v;
        }
        if let Some(v) = self.train_len {
            cfg.t_train = v;
        }
        if let Some(v) = self.lambda {
            cfg.solver.lambda = v;
        }
        if let Some(v) = self.trials {
            cfg.n_trials = v;
        }
        if let Some(v) = self.seed {
            cfg.base_seed = v;
        }
        if let Some(v) = &self.grid {
            cfg.channel.grid_mode = parse_grid(v)?;
        }
        if let Some(v) = &self.methods {
            cfg.methods = parse_methods(v)?;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `argv` (including the program name), runs the experiment and
/// writes the outputs. Returns the process exit code.
pub fn cli_main<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_CONFIG
                }
            };
        }
    };
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = match run_experiment(&cfg) {
        Ok(out) => out,
        Err(e @ Error::Config(_)) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ALL_FAILED;
        }
    };
    if let Err(e) = write_outputs(&cfg.output_dir, &cfg, &out) {
        let _ = writeln!(
            stderr,
            "error: cannot write outputs to {}: {e}",
            cfg.output_dir.display()
        );
        return EXIT_CONFIG;
    }
    let _ = write!(stdout, "{}", summary(&cfg, &out));
    if out.all_failed() {
        let _ = writeln!(stderr, "error: every trial failed");
        return EXIT_ALL_FAILED;
    }
    EXIT_OK
}
