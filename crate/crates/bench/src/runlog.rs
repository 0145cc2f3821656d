//! Merged run log: one row per control tick, written as `run.csv`.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::nodes::NodeLog;

/// Bumped whenever a column is added, removed or renamed.
pub const LOG_SCHEMA_VERSION: u32 = 1;

/// Beyond this magnitude integral values keep the exponent form.
const PLAIN_INTEGER_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest text that parses back to the same value; integral values print without a fraction.
pub fn fmt_f64(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < PLAIN_INTEGER_LIMIT {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

impl RunLog {
    /// Joins node logs on tick, keeping ticks every node logged. Columns keep
    /// the order of `parts`.
    pub fn merge(parts: &[&NodeLog]) -> RunLog {
        let header = parts.iter().flat_map(|p| p.header.iter().cloned()).collect();
        let mut rows = Vec::new();
        let Some((first, rest)) = parts.split_first() else { return RunLog { header, rows } };
        let mut cursors = vec![0usize; rest.len()];
        'outer: for (k, row) in &first.rows {
            let mut full = row.clone();
            for (p, c) in rest.iter().zip(cursors.iter_mut()) {
                while p.rows.get(*c).is_some_and(|(j, _)| j < k) {
                    *c += 1;
                }
                match p.rows.get(*c) {
                    Some((j, r)) if j == k => full.extend_from_slice(r),
                    _ => continue 'outer,
                }
            }
            rows.push(full);
        }
        RunLog { header, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Number of `name_1, name_2, …` columns.
    pub fn count_indexed(&self, name: &str) -> usize {
        (1..).take_while(|i| self.index(&format!("{name}_{i}")).is_some()).count()
    }

    /// Columns `name_1..name_n` for row `r`.
    pub fn indexed_row(&self, name: &str, r: usize) -> Vec<f64> {
        (1..=self.count_indexed(name)).map(|i| self.rows[r][self.index(&format!("{name}_{i}")).unwrap()]).collect()
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| fmt_f64(*x)))?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    /// Writes the CSV and returns its SHA-256 (hex).
    pub fn write_csv(&self, path: &Path) -> Result<String, LogError> {
        let bytes = self.to_csv_bytes()?;
        fs::write(path, &bytes).map_err(|e| LogError::Io(path.display().to_string(), e))?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn read_csv(path: &Path) -> Result<RunLog, LogError> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(parse_row(&rec?)?);
        }
        Ok(RunLog { header, rows })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad number `{0}` in log")]
    Number(String),
}

fn parse_row(rec: &csv::StringRecord) -> Result<Vec<f64>, LogError> {
    rec.iter().map(|f| f.parse::<f64>().map_err(|_| LogError::Number(f.to_string()))).collect()
}

/// Streams one node's rows to disk as they are produced (`tick` column first).
pub struct NodeLogWriter {
    w: csv::Writer<fs::File>,
}

impl NodeLogWriter {
    pub fn create(path: &Path, header: &[String]) -> Result<Self, LogError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(std::iter::once("tick").chain(header.iter().map(String::as_str)))?;
        Ok(Self { w })
    }

    pub fn append(&mut self, rows: &[(u64, Vec<f64>)]) -> Result<(), LogError> {
        for (k, r) in rows {
            self.w.write_record(std::iter::once(k.to_string()).chain(r.iter().map(|x| fmt_f64(*x))))?;
        }
        // rows survive a node that dies mid-run
        if !rows.is_empty() {
            self.flush()?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), LogError> {
        self.w.flush().map_err(|e| LogError::Io("node log".into(), e))
    }
}

pub fn read_node_log(path: &Path) -> Result<NodeLog, LogError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().skip(1).map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let k = rec.get(0).and_then(|s| s.parse::<u64>().ok()).ok_or_else(|| LogError::Number(rec.as_slice().into()))?;
        let vals = rec.iter().skip(1).map(|f| f.parse::<f64>().map_err(|_| LogError::Number(f.to_string()))).collect::<Result<_, _>>()?;
        rows.push((k, vals));
    }
    Ok(NodeLog { header, rows })
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<(), LogError> {
    if let Some(d) = path.parent() {
        fs::create_dir_all(d).map_err(|e| LogError::Io(d.display().to_string(), e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| LogError::Io(path.display().to_string(), e))?;
    f.write_all(text.as_bytes()).map_err(|e| LogError::Io(path.display().to_string(), e))
}
