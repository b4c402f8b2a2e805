use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::schema::{DatasetSchema, UserRecord};

/// Index reserved for unseen and below-cutoff tokens.
pub const UNK: u32 = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// Token ↔ index map for one sequence space. Token `tokens[i]` has index `i + 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "SpaceVocabRepr", into = "SpaceVocabRepr")]
pub struct SpaceVocab {
    pub name: String,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceVocabRepr {
    name: String,
    tokens: Vec<String>,
}

impl From<SpaceVocabRepr> for SpaceVocab {
    fn from(r: SpaceVocabRepr) -> Self {
        SpaceVocab::new(r.name, r.tokens)
    }
}

impl From<SpaceVocab> for SpaceVocabRepr {
    fn from(v: SpaceVocab) -> Self {
        SpaceVocabRepr { name: v.name, tokens: v.tokens }
    }
}

impl PartialEq for SpaceVocab {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.tokens == other.tokens
    }
}

impl SpaceVocab {
    pub fn new(name: String, tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32 + 1)).collect();
        Self { name, tokens, index }
    }

    /// Vocabulary size including UNK.
    pub fn size(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn index_of(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, index: u32) -> &str {
        match index {
            UNK => UNK_TOKEN,
            i => &self.tokens[i as usize - 1],
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Per-space vocabularies in schema order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vocabulary {
    pub spaces: Vec<SpaceVocab>,
}

impl Vocabulary {
    pub fn sizes(&self) -> Vec<usize> {
        self.spaces.iter().map(SpaceVocab::size).collect()
    }
}

/// Frequency-descending vocabulary with lexicographic tie-break; tokens seen
/// fewer than `min_freq` times map to UNK.
pub fn build_vocab(records: &[UserRecord], schema: &DatasetSchema, min_freq: usize) -> Vocabulary {
    let min_freq = min_freq.max(1);
    let spaces = schema
        .sequence_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for r in records {
                for t in r.sequence(schema, i) {
                    *counts.entry(t.as_str()).or_default() += 1;
                }
            }
            let mut ranked: Vec<(&str, usize)> =
                counts.into_iter().filter(|&(_, c)| c >= min_freq).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            SpaceVocab::new(name.clone(), ranked.into_iter().map(|(t, _)| t.to_string()).collect())
        })
        .collect();
    Vocabulary { spaces }
}

/// Model-ready form of a record: index lists per space, raw numerics and
/// target class indices, all in schema order.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedRecord {
    pub sequences: Vec<Vec<u32>>,
    pub numeric: Vec<f64>,
    pub targets: Vec<usize>,
}

pub fn encode(record: &UserRecord, vocab: &Vocabulary, schema: &DatasetSchema) -> EncodedRecord {
    let sequences = vocab
        .spaces
        .iter()
        .enumerate()
        .map(|(i, v)| record.sequence(schema, i).iter().map(|t| v.index_of(t)).collect())
        .collect();
    EncodedRecord {
        sequences,
        numeric: record.numeric.clone(),
        targets: record.target_indices(schema),
    }
}

/// Encodes a batch; numerics stay raw, consumers apply their own fitted
/// normalizer.
pub fn encode_all(records: &[UserRecord], vocab: &Vocabulary, schema: &DatasetSchema) -> Vec<EncodedRecord> {
    records.iter().map(|r| encode(r, vocab, schema)).collect()
}
