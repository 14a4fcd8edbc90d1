//! Run configuration: one JSON document, every field defaulted.
//!
//! Precedence, lowest first: defaults, `--config` file, `FFESN__*`
//! environment variables, `--set key=value`, dedicated flags
//! (`--out`, `--seed`, `--formats`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiment::{derive_seed, make_split, HyperGrid, Variant};
use crate::mackey_glass::MgParams;
use crate::report::check_formats;
use crate::topology::ReservoirKind;

pub const ENV_PREFIX: &str = "FFESN__";

/// Seed stream index used to derive `search.seed` from the master seed.
const SEARCH_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub series: SeriesConfig,
    pub reservoir: ReservoirConfig,
    pub model: ModelConfig,
    pub task: TaskConfig,
    pub search: SearchConfig,
    pub trials: TrialsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub params: MgParams,
    /// Rescale to zero mean and unit max-abs before use.
    pub normalize: bool,
    /// Load an `index,value` CSV instead of integrating.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirConfig {
    /// Which matrix `build-matrix` writes. `run` always builds both.
    pub kind: ReservoirKind,
    /// Edge-list CSV. Without it (and without `fetch`) the built-in synthetic
    /// lateral-horn fixture is used.
    pub edge_list: Option<PathBuf>,
    /// Previously written connectome matrix; takes precedence over edge lists.
    pub connectome_matrix: Option<PathBuf>,
    /// Pad or truncate the connectome to `model.n_reservoir`.
    pub fit_to_n: bool,
    pub density: f64,
    pub seed: u64,
    pub random_matrix: Option<PathBuf>,
    pub fetch: Option<FetchConfig>,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            kind: ReservoirKind::Connectome,
            edge_list: None,
            connectome_matrix: None,
            fit_to_n: true,
            density: 0.2,
            seed: 42,
            random_matrix: None,
            fetch: None,
        }
    }
}

/// neuPrint-style retrieval. The token is read from `token_env`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub endpoint: String,
    pub roi: String,
    pub dataset: String,
    pub token_env: String,
    pub timeout_secs: u64,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://neuprint.janelia.org".into(),
            roi: "LH(R)".into(),
            dataset: "hemibrain:v1.2.1".into(),
            token_env: "NEUPRINT_APPLICATION_CREDENTIALS".into(),
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Shared by both reservoirs.
    pub n_reservoir: usize,
    pub input_scale: f64,
    pub carry_state: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_reservoir: 150,
            input_scale: 1.0,
            carry_state: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub variant: Variant,
    pub train_size: usize,
    pub val_size: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            variant: Variant::B,
            train_size: 300,
            val_size: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Derived from `trials.master_seed` when absent.
    pub seed: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let grid = HyperGrid::default();
        Self {
            lambdas: grid.lambdas,
            alphas: grid.alphas,
            seed: None,
        }
    }
}

impl SearchConfig {
    pub fn grid(&self) -> HyperGrid {
        HyperGrid {
            lambdas: self.lambdas.clone(),
            alphas: self.alphas.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialsConfig {
    pub n_trials: usize,
    pub master_seed: u64,
}

impl Default for TrialsConfig {
    fn default() -> Self {
        Self {
            n_trials: 50,
            master_seed: 2023,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Any of csv, json, txt, svg. The first three are always written.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("results"),
            formats: vec!["csv".into(), "json".into(), "txt".into()],
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        self.series.params.validate()?;
        if self.model.n_reservoir == 0 {
            return Err(Error::Config("model.n_reservoir must be positive".into()));
        }
        if !(self.model.input_scale.is_finite() && self.model.input_scale >= 0.0) {
            return Err(Error::Config(
                "model.input_scale must be finite and >= 0".into(),
            ));
        }
        if !(self.reservoir.density > 0.0 && self.reservoir.density <= 1.0) {
            return Err(Error::Config(format!(
                "reservoir.density must lie in (0, 1], got {}",
                self.reservoir.density
            )));
        }
        let split = make_split(self.task.variant, self.task.train_size, self.task.val_size)?;
        if self.series.input.is_none() && self.series.params.length < split.total_len() {
            return Err(Error::Config(format!(
                "series.params.length {} is shorter than the {} points the split needs",
                self.series.params.length,
                split.total_len()
            )));
        }
        self.search.grid().validate()?;
        if self.trials.n_trials == 0 {
            return Err(Error::Config("trials.n_trials must be at least 1".into()));
        }
        check_formats(&self.output.formats)?;
        Ok(())
    }
}

/// Everything that can override the defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub env: Vec<(String, String)>,
    pub sets: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub formats: Option<Vec<String>>,
}

/// `"1e-3"` and `true` parse as JSON; anything else is a string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets a dotted key path in place. Every segment must already exist.
pub fn set_path(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let mut node = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::Config(format!("`{}` is not a section", segments[..i].join(".")))
        })?;
        node = obj
            .get_mut(*seg)
            .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?;
    }
    *node = parse_value(raw);
    Ok(())
}

/// Loads, overrides, fills the derived search seed, and validates.
pub fn resolve_config(o: &Overrides) -> Result<RunConfig> {
    let base = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            RunConfig::from_json(&text, path)?
        }
        None => RunConfig::default(),
    };
    let mut value = serde_json::to_value(&base).expect("config serializes");
    for (name, raw) in &o.env {
        if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
            let key = rest.to_ascii_lowercase().replace("__", ".");
            set_path(&mut value, &key, raw)?;
        }
    }
    for set in &o.sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("`--set {set}` is not key=value")))?;
        set_path(&mut value, key.trim(), raw)?;
    }
    let mut cfg: RunConfig =
        serde_json::from_value(value).map_err(|e| Error::Config(format!("override: {e}")))?;
    if let Some(out) = &o.out {
        cfg.output.directory = out.clone();
    }
    if let Some(seed) = o.seed {
        cfg.trials.master_seed = seed;
    }
    if let Some(formats) = &o.formats {
        cfg.output.formats = formats.clone();
    }
    if cfg.search.seed.is_none() {
        cfg.search.seed = Some(derive_seed(cfg.trials.master_seed, SEARCH_STREAM));
    }
    cfg.validate()?;
    Ok(cfg)
}
