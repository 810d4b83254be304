//! Sampled trajectories with named columns, run metadata, and the flat-file
//! formats the CLI emits: CSV for the data, a JSON sidecar for metadata.
//!
//! CSV contract: comma separated, one header row (`time` plus the column
//! names), LF line endings, floats printed with 17 significant digits so a
//! read-back reproduces the in-memory values exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{self, IntegratorConfig, OdeError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trajectory file {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("metadata error: {0}")]
    Meta(#[from] serde_json::Error),
}

/// Run provenance recorded next to every emitted trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub tool_version: String,
    pub model: String,
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub integrator: Option<IntegratorConfig>,
    /// Max absolute drift of the model's conserved quantity over the run.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conservation_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Set on figure curves whose population set is a documented stand-in
    /// rather than an externally pinned choice.
    #[serde(default)]
    pub legend_unavailable: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl TrajectoryMeta {
    pub fn new(model: &str, params: serde_json::Value) -> Self {
        TrajectoryMeta {
            tool_version: crate::TOOL_VERSION.to_string(),
            model: model.to_string(),
            params,
            integrator: None,
            conservation_drift: None,
            seed: None,
            legend_unavailable: false,
            extra: BTreeMap::new(),
        }
    }
}

/// A time grid plus named observable columns of equal length.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub metadata: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, metadata: TrajectoryMeta) -> Self {
        Trajectory {
            times,
            columns: Vec::new(),
            metadata,
        }
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) {
        assert_eq!(
            values.len(),
            self.times.len(),
            "column {name} length mismatch"
        );
        self.columns.push((name.to_string(), values));
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Earliest time at which `column` crosses `threshold` (linear
    /// interpolation between samples, bisection-resolved).
    pub fn crossing_time(&self, column: &str, threshold: f64) -> Option<f64> {
        let values = self.column(column)?;
        crossing_on_series(&self.times, values, threshold)
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json`.
    pub fn write_files(&self, stem: &Path) -> Result<(), FileError> {
        let csv_path = append_ext(stem, ".csv");
        let meta_path = append_ext(stem, ".meta.json");
        self.write_csv(&csv_path)?;
        let meta = serde_json::to_string_pretty(&self.metadata)?;
        fs::write(&meta_path, meta.as_bytes()).map_err(|source| FileError::Io {
            path: meta_path.display().to_string(),
            source,
        })?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), FileError> {
        let io_err = |source| FileError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir).map_err(io_err)?;
            }
        }
        let mut out = Vec::with_capacity(self.times.len() * (self.columns.len() + 1) * 26);
        out.extend_from_slice(b"time");
        for (name, _) in &self.columns {
            out.push(b',');
            out.extend_from_slice(name.as_bytes());
        }
        out.push(b'\n');
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{}", format_float(*t)).unwrap();
            for (_, values) in &self.columns {
                out.push(b',');
                write!(out, "{}", format_float(values[i])).unwrap();
            }
            out.push(b'\n');
        }
        fs::write(path, &out).map_err(io_err)
    }

    /// Reads a CSV written by [`Trajectory::write_csv`]. Metadata is not part
    /// of the CSV; the caller supplies it (e.g. from the JSON sidecar).
    pub fn read_csv(path: &Path, metadata: TrajectoryMeta) -> Result<Self, FileError> {
        let text = fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let malformed = |reason: &str| FileError::Malformed {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| malformed("empty file"))?;
        let mut names = header.split(',');
        if names.next() != Some("time") {
            return Err(malformed("first header field must be 'time'"));
        }
        let names: Vec<String> = names.map(str::to_string).collect();
        let mut times = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let t = fields
                .next()
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| malformed("bad time field"))?;
            times.push(t);
            for col in cols.iter_mut() {
                let v = fields
                    .next()
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| malformed("bad value field"))?;
                col.push(v);
            }
            if fields.next().is_some() {
                return Err(malformed("row has more fields than the header"));
            }
        }
        let columns = names.into_iter().zip(cols).collect();
        Ok(Trajectory {
            times,
            columns,
            metadata,
        })
    }
}

/// 17 significant digits: enough for f64 round-trip through decimal text.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Append an extension without `Path::with_extension`, which would clobber
/// anything after a dot already present in the stem (e.g. `run_v0.1`).
pub fn append_ext(stem: &Path, ext: &str) -> std::path::PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(ext);
    std::path::PathBuf::from(s)
}

/// Crossing search shared by [`Trajectory::crossing_time`] and the metric
/// extractors; same semantics as [`ode::find_crossing`].
pub fn crossing_on_series(times: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    let grid = ode::SolutionGrid {
        times: times.to_vec(),
        states: values.iter().map(|&v| vec![v]).collect(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    ode::find_crossing(&grid, 0, threshold).ok()
}

/// Midpoint value of the sample interval with the steepest average slope.
///
/// Used to locate the inflection (knee) of a monotone sampled curve: the
/// returned value is `(v[k] + v[k+1]) / 2` for the interval `k` maximizing
/// `(v[k+1] - v[k]) / (t[k+1] - t[k])`.
pub fn steepest_interval_midpoint(times: &[f64], values: &[f64]) -> Option<f64> {
    if times.len() < 2 || times.len() != values.len() {
        return None;
    }
    let mut best_slope = f64::NEG_INFINITY;
    let mut best_mid = None;
    for k in 0..times.len() - 1 {
        let dt = times[k + 1] - times[k];
        if dt <= 0.0 {
            continue;
        }
        let slope = (values[k + 1] - values[k]) / dt;
        if slope > best_slope {
            best_slope = slope;
            best_mid = Some(0.5 * (values[k] + values[k + 1]));
        }
    }
    best_mid
}
