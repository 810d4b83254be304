//! Scenario configuration and single-run execution.
//!
//! Configs are flat `key = value` text with dotted paths (see the schema in
//! the README); `#` starts a comment. Every run writes `<output_path>.csv`
//! plus a `<output_path>.meta.json` sidecar that embeds the full scenario, so
//! any emitted file can be regenerated from its own sidecar alone.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bb::{self, BbParams, BbVariant};
use crate::bf::{self, BfParams};
use crate::fb::{self, FbForm, FbParams};
use crate::ode::{linspace, logspace, IntegratorConfig, Method, OdeError};
use crate::trajectory::{append_ext, FileError, SimError, Trajectory};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
#[error("config error at `{path}`: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: &str, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    File(#[from] FileError),
}

impl From<OdeError> for RunError {
    fn from(e: OdeError) -> Self {
        RunError::Sim(SimError::Ode(e))
    }
}

/// Process exit code contract: 0 success, 2 config error, 3 integration
/// failure, 1 file I/O.
pub fn exit_code(err: &RunError) -> i32 {
    match err {
        RunError::Config(_) => 2,
        RunError::Sim(_) => 3,
        RunError::File(_) => 1,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    BbFull {
        params: BbParams,
    },
    BbLogistic {
        params: BbParams,
    },
    BbInteracting {
        params: BbParams,
    },
    Bf {
        params: BfParams,
        fast_neutrino: bool,
    },
    Fb {
        params: FbParams,
        form: FbForm,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::BbFull { .. } => "bb_full",
            ModelSpec::BbLogistic { .. } => "bb_logistic",
            ModelSpec::BbInteracting { .. } => "bb_interacting",
            ModelSpec::Bf { .. } => "bf",
            ModelSpec::Fb { .. } => "fb",
        }
    }

    /// Observable columns this model produces, in emission order.
    pub fn available_columns(&self) -> Vec<String> {
        match self {
            ModelSpec::BbFull { .. } => ["n_a", "n_b", "n_c", "s_re", "s_im", "n_b_frac"]
                .map(str::to_string)
                .to_vec(),
            ModelSpec::BbLogistic { .. } | ModelSpec::BbInteracting { .. } => {
                ["n_b", "n_b_frac"].map(str::to_string).to_vec()
            }
            ModelSpec::Bf { params, .. } => {
                let mut cols = vec![
                    "n_a".to_string(),
                    "n_c".to_string(),
                    "decayed_frac".to_string(),
                ];
                cols.extend((0..params.n_levels).map(|k| format!("n_k_{k}")));
                cols
            }
            ModelSpec::Fb { .. } => ["n_a", "n_b", "n_b_frac"].map(str::to_string).to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_samples: usize,
    pub spacing: Spacing,
    /// First positive sample for log spacing (t = 0 is always prepended).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_first: Option<f64>,
}

impl TimeGrid {
    pub fn sample_times(&self) -> Result<Vec<f64>, ConfigError> {
        if self.n_samples < 2 {
            return Err(ConfigError::new(
                "time_grid.n_samples",
                "need at least 2 samples",
            ));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(ConfigError::new("time_grid.t_end", "must be > 0"));
        }
        match self.spacing {
            Spacing::Linear => Ok(linspace(0.0, self.t_end, self.n_samples)),
            Spacing::Log => {
                let t_first = self.t_first.ok_or_else(|| {
                    ConfigError::new("time_grid.t_first", "required for log spacing")
                })?;
                if !(t_first > 0.0 && t_first < self.t_end) {
                    return Err(ConfigError::new(
                        "time_grid.t_first",
                        "must satisfy 0 < t_first < t_end",
                    ));
                }
                Ok(logspace(t_first, self.t_end, self.n_samples, true))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u64,
    #[serde(flatten)]
    pub model: ModelSpec,
    pub time_grid: TimeGrid,
    pub integrator: IntegratorConfig,
    pub outputs: Vec<String>,
    pub output_path: String,
}

impl ScenarioConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let kv = KvReader::parse(text)?;
        let schema_version = kv.opt_u64("schema_version")?.unwrap_or(SCHEMA_VERSION);
        if schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {schema_version}, expected {SCHEMA_VERSION}"),
            ));
        }
        let model_name = kv.req("model")?.to_string();
        let model = read_model(&model_name, &kv)?;

        let spacing = match kv.opt("time_grid.spacing").unwrap_or("linear") {
            "linear" => Spacing::Linear,
            "log" => Spacing::Log,
            other => {
                return Err(ConfigError::new(
                    "time_grid.spacing",
                    format!("unknown spacing `{other}` (expected linear or log)"),
                ))
            }
        };
        let time_grid = TimeGrid {
            t_end: kv.req_f64("time_grid.t_end")?,
            n_samples: kv.req_u64("time_grid.n_samples")? as usize,
            spacing,
            t_first: kv.opt_f64("time_grid.t_first")?,
        };

        let span = time_grid.t_end;
        let mut integrator = IntegratorConfig::adaptive(span);
        if let Some(m) = kv.opt("integrator.method") {
            integrator.method = match m {
                "adaptive_embedded_rk" => Method::AdaptiveEmbeddedRk,
                "fixed_rk4" => Method::FixedRk4,
                other => {
                    return Err(ConfigError::new(
                        "integrator.method",
                        format!("unknown method `{other}`"),
                    ))
                }
            };
        }
        if let Some(v) = kv.opt_f64("integrator.rel_tol")? {
            integrator.rel_tol = v;
        }
        if let Some(v) = kv.opt_f64("integrator.abs_tol")? {
            integrator.abs_tol = v;
        }
        if let Some(v) = kv.opt_f64("integrator.initial_step")? {
            integrator.initial_step = v;
        }
        if let Some(v) = kv.opt_f64("integrator.max_step")? {
            integrator.max_step = v;
        }
        if let Some(v) = kv.opt_f64("integrator.min_step")? {
            integrator.min_step = v;
        }
        if let Some(v) = kv.opt_u64("integrator.max_steps")? {
            integrator.max_steps = v as usize;
        }

        let outputs = match kv.opt("outputs") {
            Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
            None => model.available_columns(),
        };
        let output_path = kv.req("output_path")?.to_string();

        kv.finish()?;
        let config = ScenarioConfig {
            schema_version,
            model,
            time_grid,
            integrator,
            outputs,
            output_path,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let available = self.model.available_columns();
        if self.outputs.is_empty() {
            return Err(ConfigError::new(
                "outputs",
                "must name at least one observable",
            ));
        }
        for name in &self.outputs {
            if !available.iter().any(|c| c == name) {
                return Err(ConfigError::new(
                    "outputs",
                    format!(
                        "observable `{name}` not available for model {}; choose from {}",
                        self.model.name(),
                        available.join(", ")
                    ),
                ));
            }
        }
        self.time_grid.sample_times().map(|_| ())
    }

    /// Rebuild a scenario from a sidecar metadata JSON document.
    pub fn from_meta_json(meta: &serde_json::Value) -> Result<Self, ConfigError> {
        let scenario = meta
            .get("extra")
            .and_then(|e| e.get("scenario"))
            .ok_or_else(|| ConfigError::new("extra.scenario", "missing from metadata"))?;
        serde_json::from_value(scenario.clone())
            .map_err(|e| ConfigError::new("extra.scenario", e.to_string()))
    }

    /// Integrate the scenario; no files are written.
    pub fn simulate(&self) -> Result<Trajectory, RunError> {
        self.validate()?;
        let sample_times = self.time_grid.sample_times()?;
        let mut traj = match &self.model {
            ModelSpec::BbFull { params } => {
                bb::simulate(params, BbVariant::Full, &sample_times, &self.integrator)?
            }
            ModelSpec::BbLogistic { params } => {
                bb::simulate(params, BbVariant::Logistic, &sample_times, &self.integrator)?
            }
            ModelSpec::BbInteracting { params } => bb::simulate(
                params,
                BbVariant::Interacting,
                &sample_times,
                &self.integrator,
            )?,
            ModelSpec::Bf {
                params,
                fast_neutrino,
            } => bf::simulate(params, &sample_times, *fast_neutrino, &self.integrator)?,
            ModelSpec::Fb { params, form } => {
                fb::simulate(params, &sample_times, *form, &self.integrator)?
            }
        };
        // Restrict and order columns as requested.
        let mut columns = Vec::with_capacity(self.outputs.len());
        for name in &self.outputs {
            let values = traj
                .column(name)
                .expect("validated observable missing from trajectory")
                .to_vec();
            columns.push((name.clone(), values));
        }
        traj.columns = columns;
        traj.metadata.extra.insert(
            "scenario".into(),
            serde_json::to_value(self).expect("config serializes"),
        );
        Ok(traj)
    }

    /// Integrate and write `<output_path>.csv` + `<output_path>.meta.json`,
    /// optionally rooted under `out_dir`. Returns the trajectory and the CSV
    /// path.
    pub fn run(&self, out_dir: Option<&Path>) -> Result<(Trajectory, PathBuf), RunError> {
        let traj = self.simulate()?;
        let stem = match out_dir {
            Some(dir) => dir.join(&self.output_path),
            None => PathBuf::from(&self.output_path),
        };
        traj.write_files(&stem)?;
        Ok((traj, append_ext(&stem, ".csv")))
    }
}

fn read_model(name: &str, kv: &KvReader) -> Result<ModelSpec, ConfigError> {
    match name {
        "bb_full" | "bb_logistic" | "bb_interacting" => {
            let n_total = kv.req_u64("params.n_total")?;
            let g = kv.req_f64("params.g")?;
            let delta = kv.opt_f64("params.delta")?.unwrap_or(0.0);
            let gamma_cap = kv.req_f64("params.gamma_cap")?;
            let mut params = BbParams::new(n_total, g, delta, gamma_cap);
            if let Some(v) = kv.opt_f64("params.g_phase")? {
                params.g_phase = v;
            }
            if let Some(v) = kv.opt_f64("params.u")? {
                params.u = v;
            }
            if let Some(v) = kv.opt_f64("params.eps_a")? {
                params.eps_a = v;
            }
            if let Some(v) = kv.opt_f64("params.eps_b")? {
                params.eps_b = v;
            }
            if let Some(v) = kv.opt_f64("params.e_nu")? {
                params.e_nu = v;
            }
            params
                .validate()
                .map_err(|e| ConfigError::new("params", e.to_string()))?;
            Ok(match name {
                "bb_full" => ModelSpec::BbFull { params },
                "bb_logistic" => ModelSpec::BbLogistic { params },
                _ => ModelSpec::BbInteracting { params },
            })
        }
        "bf" => {
            let n_total = kv.req_u64("params.n_total")?;
            let alpha = kv.req_u64("params.alpha")? as usize;
            let g_alpha = kv.req_f64("params.g_alpha")?;
            let gamma_th = kv.req_f64("params.gamma_th")?;
            let fast_neutrino = kv.opt_bool("params.fast_neutrino")?.unwrap_or(false);
            let gamma_cap = match kv.opt_f64("params.gamma_cap")? {
                Some(v) => v,
                None if fast_neutrino => 0.0,
                None => {
                    return Err(ConfigError::new(
                        "params.gamma_cap",
                        "required unless params.fast_neutrino = true",
                    ))
                }
            };
            let mut params = BfParams::new(n_total, alpha, g_alpha, gamma_th, gamma_cap);
            if let Some(v) = kv.opt_u64("params.n_levels")? {
                params = params.with_levels(v as usize);
            }
            params
                .validate()
                .map_err(|e| ConfigError::new("params", e.to_string()))?;
            Ok(ModelSpec::Bf {
                params,
                fast_neutrino,
            })
        }
        "fb" => {
            let n_total = kv.req_u64("params.n_total")?;
            let gamma_decay = kv.req_f64("params.gamma_decay")?;
            let mut params = FbParams::new(n_total, gamma_decay);
            if let Some(v) = kv.opt_f64("params.gamma_phi_a")? {
                params.gamma_phi_a = v;
            }
            if let Some(v) = kv.opt_f64("params.gamma_phi_b")? {
                params.gamma_phi_b = v;
            }
            let form = match kv.opt("params.form").unwrap_or("pair") {
                "pair" => FbForm::Pair,
                "reduced" => FbForm::Reduced,
                other => {
                    return Err(ConfigError::new(
                        "params.form",
                        format!("unknown form `{other}` (expected pair or reduced)"),
                    ))
                }
            };
            params
                .validate()
                .map_err(|e| ConfigError::new("params", e.to_string()))?;
            Ok(ModelSpec::Fb { params, form })
        }
        other => Err(ConfigError::new(
            "model",
            format!(
                "unknown model `{other}` (expected bb_full, bb_logistic, bb_interacting, bf, fb)"
            ),
        )),
    }
}

/// Flat `key = value` reader that tracks which keys were consumed so unknown
/// keys are reported with their path.
struct KvReader {
    map: BTreeMap<String, String>,
    used: std::cell::RefCell<BTreeSet<String>>,
}

impl KvReader {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(idx) => &raw[..idx],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(&format!("line {}", lineno + 1), "expected `key = value`")
            })?;
            let key = key.trim().to_string();
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::new(&key, "duplicate key"));
            }
        }
        Ok(KvReader {
            map,
            used: Default::default(),
        })
    }

    fn opt(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key).map(String::as_str);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn req(&self, key: &str) -> Result<&str, ConfigError> {
        self.opt(key)
            .ok_or_else(|| ConfigError::new(key, "missing required key"))
    }

    fn req_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.req(key)?
            .parse()
            .map_err(|_| ConfigError::new(key, "expected a real number"))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.opt(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| ConfigError::new(key, "expected a real number"))
            })
            .transpose()
    }

    fn req_u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.req(key)?
            .parse()
            .map_err(|_| ConfigError::new(key, "expected a non-negative integer"))
    }

    fn opt_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.opt(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| ConfigError::new(key, "expected a non-negative integer"))
            })
            .transpose()
    }

    fn opt_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.opt(key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(ConfigError::new(key, "expected true or false")),
            })
            .transpose()
    }

    fn finish(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        for key in self.map.keys() {
            if !used.contains(key) {
                return Err(ConfigError::new(key, "unknown key"));
            }
        }
        Ok(())
    }
}
