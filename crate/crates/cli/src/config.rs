use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use seqfuse_core::baselines::{LogRegConfig, PCA_COMPONENTS};
use seqfuse_core::{EvalConfig, ModelConfig, SynthPreset, System, TrainConfig};

use crate::ConfigError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// JSONL dataset; when absent the synthetic generator is used.
    pub path: Option<PathBuf>,
    /// Defaults to `schema.json` next to the dataset.
    pub schema: Option<PathBuf>,
    /// Generator parameters for the oracle; defaults to `truth.json` next
    /// to the dataset when that file exists.
    pub truth: Option<PathBuf>,
    pub synth: SynthPreset,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub split_seed: u64,
    pub min_freq: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            schema: None,
            truth: None,
            synth: SynthPreset::default(),
            split: [0.8, 0.1, 0.1],
            split_seed: 0,
            min_freq: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub systems: Vec<System>,
    pub pca_components: usize,
    /// Seeds of the sweep runs.
    pub seeds: Vec<u64>,
    pub embedding_grid: Vec<usize>,
    pub depth_grid: Vec<usize>,
    /// Fine-tuned checkpoints reused by `eval` instead of fine-tuning anew.
    pub finetuned: Vec<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            systems: System::ALL.to_vec(),
            pca_components: PCA_COMPONENTS,
            seeds: vec![0, 1, 2],
            embedding_grid: vec![10, 50, 100],
            depth_grid: vec![0, 1, 2],
            finetuned: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneSection {
    /// A target name or `all`.
    pub target: String,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        Self { target: "all".into() }
    }
}

/// One file drives every subcommand; each reads the sections it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub logreg: LogRegConfig,
    pub finetune: FinetuneSection,
    pub eval: EvalSection,
    /// Multi-task checkpoint read by `finetune` and `eval`.
    pub checkpoint: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            logreg: LogRegConfig::default(),
            finetune: FinetuneSection::default(),
            eval: EvalSection::default(),
            checkpoint: None,
            out: PathBuf::from("runs"),
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", p.display())))
            }
        }
    }

    /// Applies `key.path=value` assignments. Values are parsed as JSON and
    /// fall back to plain strings.
    pub fn with_overrides(&self, sets: &[String]) -> Result<Self, ConfigError> {
        if sets.is_empty() {
            return Ok(self.clone());
        }
        let mut root = serde_json::to_value(self).map_err(|e| ConfigError(e.to_string()))?;
        for set in sets {
            let (key, raw) =
                set.split_once('=').ok_or_else(|| ConfigError(format!("override {set:?} is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut root, key, value)?;
        }
        serde_json::from_value(root).map_err(|e| ConfigError(format!("invalid override: {e}")))
    }

    /// Sets every seed of the run to `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.data.synth.seed = seed;
        self.data.split_seed = seed;
        self.model.seed = seed;
        self.train.seed = seed;
        self.logreg.seed = seed;
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            model: self.model.clone(),
            train: self.train.clone(),
            logreg: self.logreg.clone(),
            pca_components: self.eval.pca_components,
        }
    }

    pub fn fractions(&self) -> (f64, f64, f64) {
        let [a, b, c] = self.data.split;
        (a, b, c)
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError(format!("override {key:?}: {} is not a section", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(ConfigError(format!("override {key:?}: unknown key {part:?}")));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.get_mut(*part).ok_or_else(|| ConfigError(format!("override {key:?}: unknown section {part:?}")))?;
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    Err(ConfigError(format!("override {key:?} is empty")))
}
