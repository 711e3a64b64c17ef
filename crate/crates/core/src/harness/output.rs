//! CSV and config-echo files written by the harness.
//!
//! Each CSV starts with `# key = value` lines holding the settings that
//! determine its contents, followed by a header row. Wall-clock times go to
//! `timing.csv` so that `trials.csv` is reproducible byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::metrics::TrialReport;

use super::config::ExperimentConfig;
use super::experiment::ExperimentOutput;

pub const TRIALS_FILE: &str = "trials.csv";
pub const CCDF_FILE: &str = "ccdf.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const CONFIG_FILE: &str = "config.resolved";

fn preamble(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    for (k, v) in cfg.result_settings() {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}

fn status(r: &TrialReport) -> String {
    match (&r.failure, r.converged) {
        (Some(msg), _) => format!("failed: {}", msg.replace([',', '\n', '"'], " ")),
        (None, Some(false)) => "unconverged".to_string(),
        (None, _) => "ok".to_string(),
    }
}

/// `trial,method,user,eta,iterations,kkt_residual,status`; failed methods
/// get one row with empty user and η.
pub fn trials_csv(cfg: &ExperimentConfig, out: &ExperimentOutput) -> String {
    let mut s = preamble(cfg);
    s.push_str("trial,method,user,eta,iterations,kkt_residual,status\n");
    for r in &out.reports {
        let label = cfg.method_label(r.method);
        let kkt = r
            .kkt_residual
            .map_or_else(String::new, |v| format!("{v:e}"));
        let st = status(r);
        if r.failed() {
            let _ = writeln!(s, "{},{label},,,{},{kkt},{st}", r.trial_id, r.iterations);
            continue;
        }
        for (user, eta) in r.eta_per_user.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{label},{user},{eta},{},{kkt},{st}",
                r.trial_id, r.iterations
            );
        }
    }
    s
}

/// `eta_grid` followed by one column per method.
pub fn ccdf_csv(cfg: &ExperimentConfig, out: &ExperimentOutput) -> String {
    let mut s = preamble(cfg);
    let methods: Vec<_> = out.ccdf.curves.keys().copied().collect();
    s.push_str("eta_grid");
    for &m in &methods {
        s.push(',');
        s.push_str(cfg.method_label(m));
    }
    s.push('\n');
    for (i, g) in out.ccdf.grid.iter().enumerate() {
        let _ = write!(s, "{g}");
        for m in &methods {
            let _ = write!(s, ",{}", out.ccdf.curves[m][i]);
        }
        s.push('\n');
    }
    s
}

pub fn timing_csv(cfg: &ExperimentConfig, out: &ExperimentOutput) -> String {
    let mut s = String::from("trial,method,wall_time_s\n");
    for r in &out.reports {
        let _ = writeln!(
            s,
            "{},{},{:.6}",
            r.trial_id,
            cfg.method_label(r.method),
            r.wall_time
        );
    }
    s
}

/// Writes all output files into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &ExperimentOutput,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = [
        (TRIALS_FILE, trials_csv(cfg, out)),
        (CCDF_FILE, ccdf_csv(cfg, out)),
        (TIMING_FILE, timing_csv(cfg, out)),
        (CONFIG_FILE, cfg.to_text()),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Short human-readable summary: medians and failure counts per method.
pub fn summary(cfg: &ExperimentConfig, out: &ExperimentOutput) -> String {
    let mut s = String::new();
    for (&m, &failed) in &out.failures {
        let med = out
            .median_eta(m)
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            s,
            "{:<11} median eta {med}  failed trials {failed}/{}",
            cfg.method_label(m),
            cfg.n_trials
        );
    }
    s
}
