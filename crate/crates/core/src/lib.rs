//! Multi-sequence embedding model for multi-task categorical prediction.
//!
//! Variable-length categorical sequences (for example purchase categories
//! and merchant names) are embedded token by token, mean-pooled per space,
//! concatenated with numeric side features and fed through a fully
//! connected trunk into one softmax head per target. The crate also carries
//! the comparison baselines, a planted synthetic generator with an exact
//! Bayes oracle, and sweep harnesses for the main design parameters.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numerics;
pub mod training;

#[doc(hidden)]
pub mod testkit;

pub use data::{DatasetSchema, EncodedRecord, Normalizer, SynthConfig, SynthPreset, UserRecord, Vocabulary};
pub use error::{Error, Result};
pub use evaluation::{EvalConfig, EvalReport, Experiment, Pretrained, SweepResult, System};
pub use model::{ModelConfig, UserModel};
pub use training::{TrainConfig, TrainLog};
