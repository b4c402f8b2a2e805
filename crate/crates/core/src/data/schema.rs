use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub name: String,
    pub classes: Vec<String>,
}

impl TargetSpec {
    pub fn cardinality(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }
}

/// Names and shapes of the inputs (sequence spaces, numeric width) and the targets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub sequence_names: Vec<String>,
    pub numeric_dim: usize,
    pub targets: Vec<TargetSpec>,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        if self.sequence_names.is_empty() {
            return Err(Error::Schema("at least one sequence space is required".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Schema("at least one target is required".into()));
        }
        let mut seen = HashSet::new();
        for name in self.sequence_names.iter().chain(self.targets.iter().map(|t| &t.name)) {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate name `{name}`")));
            }
        }
        for t in &self.targets {
            if t.cardinality() < 2 {
                return Err(Error::Schema(format!("target `{}` needs at least 2 classes", t.name)));
            }
            let labels: HashSet<_> = t.classes.iter().collect();
            if labels.len() != t.classes.len() {
                return Err(Error::Schema(format!("target `{}` has duplicate class labels", t.name)));
            }
        }
        Ok(())
    }

    pub fn target_names(&self) -> Vec<String> {
        self.targets.iter().map(|t| t.name.clone()).collect()
    }

    pub fn target_index(&self, name: &str) -> Result<usize> {
        self.targets.iter().position(|t| t.name == name).ok_or_else(|| Error::UnknownTarget {
            name: name.to_string(),
            valid: self.target_names(),
        })
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.targets.iter().map(TargetSpec::cardinality).collect()
    }
}

/// One user: token sequences per space, numeric features and target labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    pub sequences: BTreeMap<String, Vec<String>>,
    pub numeric: Vec<f64>,
    pub targets: BTreeMap<String, String>,
}

impl UserRecord {
    pub fn validate(&self, schema: &DatasetSchema) -> Result<()> {
        for name in &schema.sequence_names {
            if !self.sequences.contains_key(name) {
                return Err(Error::Schema(format!("missing sequence `{name}`")));
            }
        }
        if let Some(extra) = self.sequences.keys().find(|k| !schema.sequence_names.contains(k)) {
            return Err(Error::Schema(format!("unknown sequence `{extra}`")));
        }
        if self.numeric.len() != schema.numeric_dim {
            return Err(Error::Schema(format!(
                "field `numeric` has {} values, expected {}",
                self.numeric.len(),
                schema.numeric_dim
            )));
        }
        if self.numeric.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("field `numeric` contains a non-finite value".into()));
        }
        for t in &schema.targets {
            let label = self
                .targets
                .get(&t.name)
                .ok_or_else(|| Error::Schema(format!("missing target `{}`", t.name)))?;
            if t.class_index(label).is_none() {
                return Err(Error::Schema(format!(
                    "target `{}` has unknown label `{label}`",
                    t.name
                )));
            }
        }
        if let Some(extra) = self.targets.keys().find(|k| schema.targets.iter().all(|t| &t.name != *k)) {
            return Err(Error::Schema(format!("unknown target `{extra}`")));
        }
        Ok(())
    }

    /// Sequence of the `i`-th schema space.
    pub fn sequence<'a>(&'a self, schema: &DatasetSchema, i: usize) -> &'a [String] {
        self.sequences.get(&schema.sequence_names[i]).map_or(&[], Vec::as_slice)
    }

    /// Class indices in schema target order. Record must be schema-valid.
    pub fn target_indices(&self, schema: &DatasetSchema) -> Vec<usize> {
        schema
            .targets
            .iter()
            .map(|t| t.class_index(&self.targets[&t.name]).expect("validated record"))
            .collect()
    }
}
