//! Dataset schema, JSONL ingestion, vocabularies, splitting, numeric
//! normalization and the planted synthetic generator with its Bayes oracle.

mod io;
mod normalize;
mod oracle;
mod schema;
mod split;
mod synth;
mod vocab;

pub use io::{fingerprint, load_jsonl, parse_jsonl, write_jsonl};
pub use normalize::Normalizer;
pub use oracle::{bayes_oracle, BayesOracle, MAX_ORACLE_TUPLES};
pub use schema::{DatasetSchema, TargetSpec, UserRecord};
pub use split::split;
pub use synth::{synth_generate, SynthConfig, SynthNumeric, SynthPreset, SynthSequence, SynthTarget};
pub use vocab::{build_vocab, encode, encode_all, EncodedRecord, SpaceVocab, Vocabulary, UNK, UNK_TOKEN};
