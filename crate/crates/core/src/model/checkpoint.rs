use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dense, ModelConfig, Params, UserModel};
use crate::data::{DatasetSchema, Normalizer, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedArray {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u32,
    schema: DatasetSchema,
    vocab: Vocabulary,
    normalizer: Normalizer,
    config: ModelConfig,
    heads: Vec<String>,
    param_count: usize,
    weights: Vec<NamedArray>,
}

fn dense_arrays(prefix: &str, d: &Dense, out: &mut Vec<NamedArray>) {
    out.push(NamedArray {
        name: format!("{prefix}.weight"),
        shape: vec![d.out_dim(), d.in_dim()],
        data: d.weight.data().to_vec(),
    });
    out.push(NamedArray { name: format!("{prefix}.bias"), shape: vec![d.out_dim()], data: d.bias.clone() });
}

impl UserModel {
    /// Serializes to the checkpoint JSON document. Embeddings are written in
    /// `l × |S|` row-major order (column = token).
    pub fn to_checkpoint_json(&self) -> Result<String> {
        let mut weights = Vec::new();
        for (space, table) in self.vocab.spaces.iter().zip(&self.params.embeddings) {
            let g = table.transpose();
            weights.push(NamedArray {
                name: format!("embedding.{}", space.name),
                shape: vec![g.rows(), g.cols()],
                data: g.into_data(),
            });
        }
        for (l, d) in self.params.trunk.iter().enumerate() {
            dense_arrays(&format!("trunk.{l}"), d, &mut weights);
        }
        for (name, d) in self.head_names().iter().zip(&self.params.heads) {
            dense_arrays(&format!("head.{name}"), d, &mut weights);
        }
        let file = CheckpointFile {
            format_version: CHECKPOINT_VERSION,
            schema: self.schema.clone(),
            vocab: self.vocab.clone(),
            normalizer: self.normalizer.clone(),
            config: self.config.clone(),
            heads: self.head_names(),
            param_count: self.param_count(),
            weights,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<UserModel> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("corrupt file: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CHECKPOINT_VERSION) => {}
            Some(v) => {
                return Err(Error::Checkpoint(format!(
                    "format version {v} is not supported (expected {CHECKPOINT_VERSION})"
                )))
            }
            None => return Err(Error::Checkpoint("corrupt file: missing format_version".into())),
        }
        let file: CheckpointFile =
            serde_json::from_value(value).map_err(|e| Error::Checkpoint(format!("corrupt file: {e}")))?;
        file.schema.validate()?;
        file.config.validate(&file.schema)?;

        let mut arrays: HashMap<String, NamedArray> = HashMap::new();
        let mut stored = 0;
        for a in file.weights {
            stored += a.data.len();
            if a.shape.iter().product::<usize>() != a.data.len() {
                return Err(Error::Checkpoint(format!("array `{}` does not match its shape", a.name)));
            }
            if arrays.insert(a.name.clone(), a).is_some() {
                return Err(Error::Checkpoint("duplicate array name".into()));
            }
        }
        if stored != file.param_count {
            return Err(Error::Checkpoint(format!(
                "file declares {} parameters but stores {stored}",
                file.param_count
            )));
        }
        let mut take = |name: String, shape: &[usize]| -> Result<Vec<f64>> {
            let a = arrays.remove(&name).ok_or_else(|| Error::Checkpoint(format!("missing array `{name}`")))?;
            if a.shape != shape {
                return Err(Error::Checkpoint(format!("array `{name}` has shape {:?}, expected {shape:?}", a.shape)));
            }
            Ok(a.data)
        };

        let mut embeddings = Vec::new();
        for (space, &l) in file.vocab.spaces.iter().zip(&file.config.embedding_dims) {
            let g = Matrix::from_vec(l, space.size(), take(format!("embedding.{}", space.name), &[l, space.size()])?)?;
            embeddings.push(g.transpose());
        }
        let mut take_dense = |prefix: String, out_dim: usize, in_dim: usize| -> Result<Dense> {
            let w = take(format!("{prefix}.weight"), &[out_dim, in_dim])?;
            let b = take(format!("{prefix}.bias"), &[out_dim])?;
            Ok(Dense { weight: Matrix::from_vec(out_dim, in_dim, w)?, bias: b })
        };
        let raw = file.config.embedding_dims.iter().sum::<usize>() + file.schema.numeric_dim;
        let mut width = raw;
        let mut trunk = Vec::new();
        for l in 0..file.config.trunk_depth {
            trunk.push(take_dense(format!("trunk.{l}"), file.config.trunk_width, width)?);
            width = file.config.trunk_width;
        }
        let mut head_targets = Vec::new();
        let mut heads = Vec::new();
        for name in &file.heads {
            let j = file.schema.target_index(name)?;
            heads.push(take_dense(format!("head.{name}"), file.schema.targets[j].cardinality(), width)?);
            head_targets.push(j);
        }
        if head_targets.is_empty() {
            return Err(Error::Checkpoint("checkpoint has no heads".into()));
        }
        if let Some(extra) = arrays.keys().next() {
            return Err(Error::Checkpoint(format!("unexpected array `{extra}`")));
        }
        let params = Params { embeddings, trunk, heads };
        for s in params.slices() {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Checkpoint("non-finite parameter".into()));
            }
        }
        Ok(UserModel::from_parts(file.schema, file.vocab, file.normalizer, file.config, head_targets, params))
    }
}

pub fn save_checkpoint(model: &UserModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model.to_checkpoint_json()?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<UserModel> {
    let text = std::fs::read_to_string(path)?;
    UserModel::from_checkpoint_json(&text)
}

/// Number of floats stored in a checkpoint document.
pub fn stored_float_count(text: &str) -> Result<usize> {
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(file.weights.iter().map(|a| a.data.len()).sum())
}
