//! One-axis parameter sweeps: one trajectory per value plus a summary CSV of
//! derived scalars (t_50, sharpness, residual, plateau metric, inflection).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::bf;
use crate::scenario::{ConfigError, ModelSpec, RunError, ScenarioConfig};
use crate::trajectory::{
    append_ext, format_float, steepest_interval_midpoint, FileError, Trajectory,
};

#[derive(Debug, Clone)]
pub struct SweepAxis {
    /// Dotted path of a numeric field, e.g. `params.n_total` or `params.u`.
    pub param_path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub t_50: f64,
    pub sharpness: f64,
    pub residual: f64,
    pub plateau_metric: f64,
    pub inflection_frac: f64,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

/// Substitute `value` at `param_path` inside the scenario (through its JSON
/// form, so the path addressing matches the config file syntax).
pub fn with_param(
    config: &ScenarioConfig,
    param_path: &str,
    value: f64,
) -> Result<ScenarioConfig, ConfigError> {
    let mut doc = serde_json::to_value(config).expect("config serializes");
    let mut node = &mut doc;
    let segments: Vec<&str> = param_path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            ConfigError::new(
                param_path,
                format!("`{}` is not an object", segments[..i].join(".")),
            )
        })?;
        node = obj
            .get_mut(*seg)
            .ok_or_else(|| ConfigError::new(param_path, format!("no field `{seg}`")))?;
    }
    match node {
        serde_json::Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(ConfigError::new(
                        param_path,
                        format!("field is integral; got {value}"),
                    ));
                }
                *node = serde_json::json!(value as u64);
            } else {
                *node = serde_json::json!(value);
            }
        }
        _ => return Err(ConfigError::new(param_path, "field is not numeric")),
    }
    serde_json::from_value(doc).map_err(|e| ConfigError::new(param_path, e.to_string()))
}

/// The model's decayed-fraction column.
fn fraction_column(model: &ModelSpec) -> &'static str {
    match model {
        ModelSpec::Bf { .. } => "decayed_frac",
        _ => "n_b_frac",
    }
}

fn derive_row(value: f64, traj: &Trajectory, model: &ModelSpec) -> SweepRow {
    let frac_col = fraction_column(model);
    let frac = traj.column(frac_col);
    let t_50 = traj.crossing_time(frac_col, 0.5).unwrap_or(f64::NAN);
    let sharpness = match (
        frac,
        traj.crossing_time(frac_col, 0.1),
        traj.crossing_time(frac_col, 0.9),
    ) {
        (Some(f), Some(t10), Some(t90)) if f.iter().any(|&v| v >= 0.99) && t_50.is_finite() => {
            (t90 - t10) / t_50
        }
        _ => f64::NAN,
    };
    let residual = traj
        .column("n_a")
        .and_then(|c| c.last().copied())
        .unwrap_or(f64::NAN);
    let plateau_metric = match model {
        ModelSpec::Bf { .. } => bf::plateau_metric(traj).unwrap_or(f64::NAN),
        _ => f64::NAN,
    };
    let inflection_frac = frac
        .and_then(|f| steepest_interval_midpoint(&traj.times, f))
        .unwrap_or(f64::NAN);
    SweepRow {
        value,
        t_50,
        sharpness,
        residual,
        plateau_metric,
        inflection_frac,
    }
}

/// Run the sweep. Each run writes its own trajectory files named
/// `<output_path>_v<index>`; the summary CSV (and its metadata sidecar) is
/// written after all runs complete, rows in the order the values were given.
/// With `jobs > 1` runs execute concurrently; outputs are identical either
/// way.
pub fn sweep(
    config: &ScenarioConfig,
    axis: &SweepAxis,
    out_dir: Option<&Path>,
    jobs: usize,
) -> Result<SweepOutput, RunError> {
    if axis.values.is_empty() {
        return Err(ConfigError::new("values", "sweep needs at least one value").into());
    }
    // Validate the path before spending any integration time.
    with_param(config, &axis.param_path, axis.values[0])?;

    let configs: Vec<ScenarioConfig> = axis
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = with_param(config, &axis.param_path, v)?;
            c.output_path = format!("{}_v{i}", config.output_path);
            Ok::<_, ConfigError>(c)
        })
        .collect::<Result<_, _>>()?;

    type RunResult = Result<(Trajectory, PathBuf), RunError>;
    let mut results: Vec<Option<RunResult>> = Vec::new();
    results.resize_with(configs.len(), || None);

    let jobs = jobs.max(1).min(configs.len());
    if jobs == 1 {
        for (i, c) in configs.iter().enumerate() {
            results[i] = Some(run_one(c, &axis.values[i], out_dir));
        }
    } else {
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (chunk_idx, chunk) in configs.chunks(configs.len().div_ceil(jobs)).enumerate() {
                let base = chunk_idx * configs.len().div_ceil(jobs);
                let values = &axis.values;
                handles.push(scope.spawn(move || {
                    chunk
                        .iter()
                        .enumerate()
                        .map(|(j, c)| (base + j, run_one(c, &values[base + j], out_dir)))
                        .collect::<Vec<_>>()
                }));
            }
            for handle in handles {
                for (idx, res) in handle.join().expect("sweep worker panicked") {
                    results[idx] = Some(res);
                }
            }
        });
    }

    let mut rows = Vec::with_capacity(configs.len());
    let mut files = Vec::with_capacity(configs.len());
    for (i, res) in results.into_iter().enumerate() {
        let (traj, path) = res.expect("all runs executed")?;
        rows.push(derive_row(axis.values[i], &traj, &config.model));
        files.push(path);
    }

    // Summary CSV.
    let summary_stem = match out_dir {
        Some(dir) => dir.join(format!("{}_summary", config.output_path)),
        None => PathBuf::from(format!("{}_summary", config.output_path)),
    };
    let summary_path = append_ext(&summary_stem, ".csv");
    if let Some(dir) = summary_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| FileError::Io {
                path: summary_path.display().to_string(),
                source,
            })?;
        }
    }
    let mut text = String::from("value,t_50,sharpness,residual,plateau_metric,inflection_frac\n");
    for r in &rows {
        let fields = [
            r.value,
            r.t_50,
            r.sharpness,
            r.residual,
            r.plateau_metric,
            r.inflection_frac,
        ];
        let mut line = String::new();
        for (i, v) in fields.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format_float(*v));
        }
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(&summary_path, text.as_bytes()).map_err(|source| FileError::Io {
        path: summary_path.display().to_string(),
        source,
    })?;
    let meta = serde_json::json!({
        "tool_version": crate::TOOL_VERSION,
        "sweep": { "param_path": axis.param_path, "values": axis.values },
        "scenario": serde_json::to_value(config).expect("config serializes"),
    });
    let meta_path = append_ext(&summary_stem, ".meta.json");
    let mut buf = Vec::new();
    writeln!(buf, "{}", serde_json::to_string_pretty(&meta).unwrap()).unwrap();
    std::fs::write(&meta_path, &buf).map_err(|source| FileError::Io {
        path: meta_path.display().to_string(),
        source,
    })?;

    Ok(SweepOutput {
        rows,
        files,
        summary_path,
    })
}

fn run_one(
    config: &ScenarioConfig,
    value: &f64,
    out_dir: Option<&Path>,
) -> Result<(Trajectory, PathBuf), RunError> {
    let mut traj = config.simulate()?;
    traj.metadata
        .extra
        .insert("sweep_value".into(), serde_json::json!(value));
    let stem = match out_dir {
        Some(dir) => dir.join(&config.output_path),
        None => PathBuf::from(&config.output_path),
    };
    traj.write_files(&stem)?;
    Ok((traj, append_ext(&stem, ".csv")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fb::reduced_time_to;
    use crate::fb::FbParams;

    fn fb_config(t_end: f64, samples: usize) -> ScenarioConfig {
        ScenarioConfig::from_text(&format!(
            "model = fb\nparams.n_total = 100\nparams.gamma_decay = 1.0\n\
             time_grid.t_end = {t_end}\ntime_grid.n_samples = {samples}\noutput_path = fbsweep\n"
        ))
        .unwrap()
    }

    #[test]
    fn empty_values_rejected() {
        let config = fb_config(0.01, 100);
        let axis = SweepAxis {
            param_path: "params.n_total".into(),
            values: vec![],
        };
        let err = sweep(&config, &axis, None, 1).unwrap_err();
        assert!(matches!(err, RunError::Config(_)));
    }

    #[test]
    fn bad_paths_rejected() {
        let config = fb_config(0.01, 100);
        for path in ["params.nope", "output_path", "params.n_total.x"] {
            let err = with_param(&config, path, 1.0).unwrap_err();
            assert_eq!(err.path, path);
        }
        // Integral field refuses fractional values.
        assert!(with_param(&config, "params.n_total", 10.5).is_err());
        assert!(with_param(&config, "params.n_total", 200.0).is_ok());
    }

    #[test]
    fn fb_population_sweep_t50_decreasing() {
        let dir = tempfile::tempdir().unwrap();
        // Window covering the slowest (smallest N) explosion.
        let t_end = 1.3 * reduced_time_to(99.9, &FbParams::new(100, 1.0));
        let config = fb_config(t_end, 6000);
        let axis = SweepAxis {
            param_path: "params.n_total".into(),
            values: vec![100.0, 1000.0],
        };
        let out = sweep(&config, &axis, Some(dir.path()), 2).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(
            out.rows[0].t_50 > out.rows[1].t_50,
            "t50 {} vs {}",
            out.rows[0].t_50,
            out.rows[1].t_50
        );
        assert!(out.summary_path.exists());
        let text = std::fs::read_to_string(&out.summary_path).unwrap();
        assert!(text.starts_with("value,t_50,sharpness,residual,plateau_metric,inflection_frac\n"));
        assert_eq!(text.lines().count(), 3);
        // Parallel and serial sweeps emit identical bytes.
        let dir2 = tempfile::tempdir().unwrap();
        let out2 = sweep(&config, &axis, Some(dir2.path()), 1).unwrap();
        assert_eq!(
            std::fs::read(&out.summary_path).unwrap(),
            std::fs::read(&out2.summary_path).unwrap()
        );
        for (a, b) in out.files.iter().zip(&out2.files) {
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        }
    }

    #[test]
    fn interacting_sweep_inflection_non_decreasing_in_eta() {
        let dir = tempfile::tempdir().unwrap();
        // eta = (u N / Γ)² at N = 1000, Γ = 1: u = sqrt(eta)/1000.
        let n: u64 = 1000;
        let config = ScenarioConfig::from_text(&format!(
            "model = bb_interacting\nparams.n_total = {n}\n\
             params.g = 0.7071067811865476\nparams.gamma_cap = 1.0\nparams.u = 0.0\n\
             time_grid.t_end = 0.3\ntime_grid.n_samples = 4000\noutput_path = etasweep\n"
        ))
        .unwrap();
        let values: Vec<f64> = [0.0f64, 10.0]
            .iter()
            .map(|eta| eta.sqrt() / n as f64)
            .collect();
        let axis = SweepAxis {
            param_path: "params.u".into(),
            values,
        };
        let out = sweep(&config, &axis, Some(dir.path()), 1).unwrap();
        let infl: Vec<f64> = out.rows.iter().map(|r| r.inflection_frac).collect();
        assert!(
            infl[1] >= infl[0] - 1e-12,
            "inflection not non-decreasing in eta: {infl:?}"
        );
    }
}
