//! Tidy per-figure CSV files cut from the run log.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::runlog::{LogError, RunLog};

/// Figure keys and the log columns (by prefix) each file carries after `t`.
pub const PLOTS: [(&str, &[&str]); 4] = [
    ("error_mrp", &["sigma_e"]),
    ("body_rate", &["omega", "omega_d", "omega_err"]),
    ("health", &["theta", "lambda"]),
    ("wheel_speed", &["rw_speed_meas", "rw_speed_true", "sim_wheel_speed"]),
];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("unknown plot `{0}`; valid keys: {keys}", keys = valid_keys().join(", "))]
    UnknownKey(String),
    #[error("run log has no `{0}` columns")]
    MissingColumns(String),
    #[error(transparent)]
    Log(#[from] LogError),
}

pub fn valid_keys() -> Vec<&'static str> {
    PLOTS.iter().map(|(k, _)| *k).collect()
}

/// Extracts the columns of figure `which`.
pub fn plot_data(log: &RunLog, which: &str) -> Result<RunLog, PlotError> {
    let (_, groups) = PLOTS.iter().find(|(k, _)| *k == which).ok_or_else(|| PlotError::UnknownKey(which.to_string()))?;
    let mut cols = vec![log.index("t").ok_or_else(|| PlotError::MissingColumns("t".into()))?];
    for g in *groups {
        let before = cols.len();
        match log.index(g) {
            Some(i) => cols.push(i),
            None => cols.extend((1..=log.count_indexed(g)).filter_map(|i| log.index(&format!("{g}_{i}")))),
        }
        if cols.len() == before {
            return Err(PlotError::MissingColumns(g.to_string()));
        }
    }
    Ok(RunLog {
        header: cols.iter().map(|&i| log.header[i].clone()).collect(),
        rows: log.rows.iter().map(|r| cols.iter().map(|&i| r[i]).collect()).collect(),
    })
}

/// Writes `plot_<which>.csv` into `dir` and returns its path.
pub fn emit_plot_data(log: &RunLog, which: &str, dir: &Path) -> Result<PathBuf, PlotError> {
    let data = plot_data(log, which)?;
    let path = dir.join(format!("plot_{which}.csv"));
    data.write_csv(&path)?;
    Ok(path)
}
