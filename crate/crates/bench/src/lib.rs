//! Shared fixtures for the benchmarks.

use seqfuse_core::data::{build_vocab, encode_all, synth_generate};
use seqfuse_core::{EncodedRecord, SynthConfig, SynthPreset, UserRecord, Vocabulary};

pub struct Fixture {
    pub truth: SynthConfig,
    pub records: Vec<UserRecord>,
    pub vocab: Vocabulary,
    pub encoded: Vec<EncodedRecord>,
}

/// Default generator at a reduced user count.
pub fn fixture(n_users: usize) -> Fixture {
    let truth = SynthPreset { n_users, ..SynthPreset::default() }.build();
    let (records, schema) = synth_generate(&truth).expect("default preset generates");
    let vocab = build_vocab(&records, &schema, 1);
    let encoded = encode_all(&records, &vocab, &schema);
    Fixture { truth, records, vocab, encoded }
}
