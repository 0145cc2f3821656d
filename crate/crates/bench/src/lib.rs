//! Test bench: scenario files, the in-process (MIL) and multi-process
//! (distributed) runners, run logs, metrics and per-figure plot data.

// `!(x > 0.0)` in validation also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dist;
pub mod metrics;
pub mod mil;
pub mod nodes;
pub mod plots;
pub mod runlog;

use std::path::{Path, PathBuf};

use rwhil_bus::Role;
use serde::Serialize;
use thiserror::Error;

pub use config::{ConfigError, RunMode, Scenario, ScenarioConfig};
pub use metrics::{compute_metrics, evaluate, Assertion, Metrics};
pub use mil::{run_mil, RunOutput};
pub use runlog::RunLog;

/// Version of the `summary.json` layout.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub config: PathBuf,
    pub mode: Option<RunMode>,
    pub accelerated: bool,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub emit_plots: bool,
    /// Executable to spawn for distributed nodes.
    pub exe: Option<PathBuf>,
    pub kill: Option<(Role, f64)>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    /// CLI exit status: 1 for configuration problems, 2 for everything at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub log_schema_version: u32,
    pub scenario: String,
    pub mode: RunMode,
    pub accelerated: bool,
    pub seed: u64,
    /// `"completed"` or `"failed"`.
    pub status: String,
    pub failure: Option<String>,
    pub last_tick: Option<u64>,
    pub wall_seconds: f64,
    pub run_csv: String,
    pub run_csv_sha256: String,
    pub metrics: Metrics,
    pub link: metrics::LinkSummary,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub plots: Vec<String>,
}

impl Summary {
    pub fn exit_code(&self) -> i32 {
        if self.status == "completed" && self.passed {
            0
        } else {
            2
        }
    }
}

pub fn load_scenario(path: &Path, seed: Option<u64>, mode: Option<RunMode>) -> Result<Scenario, ConfigError> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    Scenario::new(cfg)
}

/// Writes `run.csv`, optional plot files and `summary.json` into `out`.
pub fn write_outputs(s: &Scenario, run: &RunOutput, out: &Path, accelerated: bool, emit_plots: bool) -> Result<Summary, RunError> {
    let io = |e: std::io::Error| RunError::Runtime(format!("{}: {e}", out.display()));
    std::fs::create_dir_all(out).map_err(io)?;
    let digest = run.log.write_csv(&out.join("run.csv")).map_err(|e| RunError::Runtime(e.to_string()))?;
    let mut plots = Vec::new();
    if emit_plots {
        for key in plots::valid_keys() {
            let p = plots::emit_plot_data(&run.log, key, out).map_err(|e| RunError::Runtime(e.to_string()))?;
            plots.push(p.file_name().unwrap_or_default().to_string_lossy().into_owned());
        }
    }
    let m = compute_metrics(&run.log, s, &run.exec_seconds);
    let assertions = s.config.expect.as_ref().map(|x| evaluate(x, &m, s, run.complete)).unwrap_or_default();
    let summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        log_schema_version: runlog::LOG_SCHEMA_VERSION,
        scenario: s.config.name.clone(),
        mode: s.config.mode,
        accelerated,
        seed: s.config.seed,
        status: if run.complete { "completed" } else { "failed" }.into(),
        failure: run.failure.clone(),
        last_tick: run.last_tick,
        wall_seconds: run.wall_seconds,
        run_csv: "run.csv".into(),
        run_csv_sha256: digest,
        passed: assertions.iter().all(|a| a.passed),
        assertions,
        metrics: m,
        link: run.link.clone(),
        plots,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| RunError::Runtime(e.to_string()))?;
    runlog::write_text(&out.join("summary.json"), &json).map_err(|e| RunError::Runtime(e.to_string()))?;
    Ok(summary)
}

/// Loads, runs and reports one scenario.
pub fn execute(req: &RunRequest) -> Result<Summary, RunError> {
    let s = load_scenario(&req.config, req.seed, req.mode)?;
    let run = match s.config.mode {
        RunMode::Mil => run_mil(&s),
        RunMode::Distributed => {
            let exe = match &req.exe {
                Some(p) => p.clone(),
                None => std::env::current_exe().map_err(|e| RunError::Runtime(e.to_string()))?,
            };
            let opt = dist::DistOptions { exe, accelerated: req.accelerated, node_dir: req.out.join("nodes"), kill: req.kill };
            dist::run_distributed(&s, &opt).map_err(|e| RunError::Runtime(e.to_string()))?
        }
    };
    write_outputs(&s, &run, &req.out, req.accelerated || s.config.mode == RunMode::Mil, req.emit_plots)
}
