//! Small fixtures shared by unit, integration and acceptance tests.

use crate::data::{DatasetSchema, EncodedRecord, SpaceVocab, TargetSpec, Vocabulary};
use crate::model::{ModelConfig, UserModel};
use crate::training::multitask_loss;
use crate::numerics::Rng;

/// Schema and vocabulary with the given vocabulary sizes (UNK included),
/// numeric width and target cardinalities.
pub fn fixture(vocab_sizes: &[usize], numeric_dim: usize, cards: &[usize]) -> (DatasetSchema, Vocabulary) {
    let names: Vec<String> = (0..vocab_sizes.len()).map(|i| format!("seq{i}")).collect();
    let targets = cards
        .iter()
        .enumerate()
        .map(|(j, &k)| TargetSpec { name: format!("target{j}"), classes: (0..k).map(|c| format!("c{c}")).collect() })
        .collect();
    let vocab = Vocabulary {
        spaces: names
            .iter()
            .zip(vocab_sizes)
            .map(|(n, &s)| SpaceVocab::new(n.clone(), (1..s).map(|t| format!("{n}_tok{t}")).collect()))
            .collect(),
    };
    (DatasetSchema { sequence_names: names, numeric_dim, targets }, vocab)
}

/// Random encoded record with sequence lengths in `0..=max_len`.
pub fn random_record(schema: &DatasetSchema, vocab: &Vocabulary, max_len: usize, rng: &mut Rng) -> EncodedRecord {
    EncodedRecord {
        sequences: vocab
            .spaces
            .iter()
            .map(|s| {
                let len = rng.below(max_len as u64 + 1) as usize;
                (0..len).map(|_| rng.below(s.size() as u64) as u32).collect()
            })
            .collect(),
        numeric: (0..schema.numeric_dim).map(|_| rng.normal()).collect(),
        targets: schema.targets.iter().map(|t| rng.below(t.cardinality() as u64) as usize).collect(),
    }
}

/// The small reference network: vocabularies 10 + 10, `l = 4`, `p = 3`,
/// one trunk layer of width 8, targets with 2 and 3 classes.
pub fn reference_fixture() -> (DatasetSchema, Vocabulary) {
    fixture(&[10, 10], 3, &[2, 3])
}

pub fn reference_config(seed: u64) -> ModelConfig {
    ModelConfig { embedding_dims: vec![4, 4], trunk_depth: 1, trunk_width: 8, seed, ..ModelConfig::default() }
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, over every parameter of `model`.
///
/// The relative error is `|fd - an| / max(|fd|, |an|, 1e-6)`.
pub fn max_gradient_error(model: &UserModel, rec: &EncodedRecord, weights: &[f64], h: f64) -> f64 {
    let loss = |m: &UserModel| {
        let (probs, _) = m.forward(rec).expect("forward");
        multitask_loss(&probs, &rec.targets, weights).expect("loss")
    };
    let (_, trace) = model.forward(rec).expect("forward");
    let grads = model.backward(&trace, &rec.targets, weights).expect("backward");
    let analytic = grads.slices();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (s, slice) in analytic.iter().enumerate() {
        for (k, &an) in slice.iter().enumerate() {
            let base = probe.params().slices()[s][k];
            probe.params_mut().slices_mut()[s][k] = base + h;
            let up = loss(&probe);
            probe.params_mut().slices_mut()[s][k] = base - h;
            let down = loss(&probe);
            probe.params_mut().slices_mut()[s][k] = base;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
        }
    }
    worst
}
