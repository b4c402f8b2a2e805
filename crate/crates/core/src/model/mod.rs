//! The multi-sequence embedding network.
//!
//! Layout of the raw user representation: the mean-pooled embedding of each
//! sequence space in schema order, followed by the z-scored numerics. A
//! rectified fully connected trunk maps it to the deep representation, and
//! every retained target has its own softmax head on top.

mod checkpoint;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, stored_float_count, CHECKPOINT_VERSION};

use crate::data::{DatasetSchema, EncodedRecord, Normalizer, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{softmax_in_place, Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Embedding width per sequence space, in schema order.
    pub embedding_dims: Vec<usize>,
    pub trunk_depth: usize,
    pub trunk_width: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { embedding_dims: vec![100, 100], trunk_depth: 1, trunk_width: 128, activation: Activation::Relu, seed: 0 }
    }
}

impl ModelConfig {
    pub fn validate(&self, schema: &DatasetSchema) -> Result<()> {
        if self.embedding_dims.len() != schema.sequence_names.len() {
            return Err(Error::Config(format!(
                "{} embedding dims for {} sequence spaces",
                self.embedding_dims.len(),
                schema.sequence_names.len()
            )));
        }
        if self.embedding_dims.contains(&0) {
            return Err(Error::Config("embedding dims must be at least 1".into()));
        }
        if self.trunk_depth > 0 && self.trunk_width == 0 {
            return Err(Error::Config("trunk width must be at least 1".into()));
        }
        Ok(())
    }
}

/// Affine layer `y = W x + b` with `W` of shape `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self { weight: Matrix::zeros(out_dim, in_dim), bias: vec![0.0; out_dim] }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    #[inline]
    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        self.weight.matvec_into(x, out);
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.data().len() + self.bias.len()
    }
}

/// All trainable arrays. Also used as the gradient and optimizer-moment buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Token-major tables (`|S_i| × l_i`): row `c` is the embedding of token `c`.
    pub embeddings: Vec<Matrix>,
    pub trunk: Vec<Dense>,
    pub heads: Vec<Dense>,
}

impl Params {
    pub fn zeros_like(&self) -> Self {
        Self {
            embeddings: self.embeddings.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect(),
            trunk: self.trunk.iter().map(|d| Dense::zeros(d.out_dim(), d.in_dim())).collect(),
            heads: self.heads.iter().map(|d| Dense::zeros(d.out_dim(), d.in_dim())).collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.embeddings.iter().map(Matrix::data).collect();
        for d in self.trunk.iter().chain(&self.heads) {
            out.push(d.weight.data());
            out.push(&d.bias);
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.embeddings.iter_mut().map(Matrix::data_mut).collect();
        for d in self.trunk.iter_mut().chain(self.heads.iter_mut()) {
            out.push(d.weight.data_mut());
            out.push(&mut d.bias);
        }
        out
    }

    pub fn count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn fill_zero(&mut self) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

/// A trained or freshly initialised network together with the schema,
/// vocabulary and normalizer it expects its inputs to follow.
#[derive(Clone, Debug)]
pub struct UserModel {
    schema: DatasetSchema,
    vocab: Vocabulary,
    normalizer: Normalizer,
    config: ModelConfig,
    /// Schema target index served by each head.
    head_targets: Vec<usize>,
    params: Params,
    stamp: u64,
}

/// Activations cached by [`UserModel::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    stamp: u64,
    pub input: EncodedRecord,
    /// Per space: distinct token indices in ascending order with weight `count / len`.
    pub pooling: Vec<Vec<(u32, f64)>>,
    pub raw: Vec<f64>,
    /// Post-activation output of each trunk layer.
    pub layers: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn deep(&self) -> &[f64] {
        self.layers.last().unwrap_or(&self.raw)
    }
}

fn pooling_weights(indices: &[u32]) -> Vec<(u32, f64)> {
    if indices.is_empty() {
        return Vec::new();
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    let len = indices.len() as f64;
    let mut out: Vec<(u32, f64)> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push((sorted[i], (j - i) as f64 / len));
        i = j;
    }
    out
}

fn pool_into(table: &Matrix, weights: &[(u32, f64)], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for &(idx, w) in weights {
        for (o, &e) in out.iter_mut().zip(table.row(idx as usize)) {
            *o += w * e;
        }
    }
}

/// Mean of the selected embeddings from a token-major table (row = token).
///
/// Duplicates count with multiplicity; an empty list pools to the zero
/// vector. Accumulation runs over distinct indices in ascending order, so
/// the result is identical for every ordering of `indices`.
pub fn embed_sequence(table: &Matrix, indices: &[u32]) -> Result<Vec<f64>> {
    if let Some(&bad) = indices.iter().find(|&&i| i as usize >= table.rows()) {
        return Err(Error::Dimension(format!("token index {bad} out of range for {} rows", table.rows())));
    }
    let mut out = vec![0.0; table.cols()];
    pool_into(table, &pooling_weights(indices), &mut out);
    Ok(out)
}

/// Builds a model with embeddings ~ U(−0.05, 0.05), weights ~ N(0, 2/fan_in)
/// and zero biases, all drawn from streams of `cfg.seed`.
pub fn init_model(
    cfg: &ModelConfig,
    schema: &DatasetSchema,
    vocab: &Vocabulary,
    normalizer: &Normalizer,
) -> Result<UserModel> {
    schema.validate()?;
    cfg.validate(schema)?;
    if vocab.spaces.len() != schema.sequence_names.len() {
        return Err(Error::Config("vocabulary does not match schema".into()));
    }
    if normalizer.dim() != schema.numeric_dim {
        return Err(Error::Config("normalizer does not match numeric dim".into()));
    }
    let root = Rng::new(cfg.seed).stream("init");
    let embeddings = vocab
        .spaces
        .iter()
        .zip(&cfg.embedding_dims)
        .map(|(space, &l)| {
            let mut rng = root.stream(&format!("embedding.{}", space.name));
            let data = (0..space.size() * l).map(|_| rng.uniform(-0.05, 0.05)).collect();
            Matrix::from_vec(space.size(), l, data).expect("sized")
        })
        .collect();
    let he = |rng: &mut Rng, out_dim: usize, in_dim: usize| {
        let std = (2.0 / in_dim.max(1) as f64).sqrt();
        let data = (0..out_dim * in_dim).map(|_| std * rng.normal()).collect();
        Dense { weight: Matrix::from_vec(out_dim, in_dim, data).expect("sized"), bias: vec![0.0; out_dim] }
    };
    let raw = cfg.embedding_dims.iter().sum::<usize>() + schema.numeric_dim;
    let mut width = raw;
    let mut trunk = Vec::with_capacity(cfg.trunk_depth);
    for l in 0..cfg.trunk_depth {
        trunk.push(he(&mut root.stream(&format!("trunk.{l}")), cfg.trunk_width, width));
        width = cfg.trunk_width;
    }
    let heads = schema
        .targets
        .iter()
        .map(|t| he(&mut root.stream(&format!("head.{}", t.name)), t.cardinality(), width))
        .collect();
    Ok(UserModel {
        schema: schema.clone(),
        vocab: vocab.clone(),
        normalizer: normalizer.clone(),
        config: cfg.clone(),
        head_targets: (0..schema.targets.len()).collect(),
        params: Params { embeddings, trunk, heads },
        stamp: fresh_stamp(),
    })
}

impl UserModel {
    pub(crate) fn from_parts(
        schema: DatasetSchema,
        vocab: Vocabulary,
        normalizer: Normalizer,
        config: ModelConfig,
        head_targets: Vec<usize>,
        params: Params,
    ) -> Self {
        Self { schema, vocab, normalizer, config, head_targets, params, stamp: fresh_stamp() }
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding traces.
    pub fn params_mut(&mut self) -> &mut Params {
        self.stamp = fresh_stamp();
        &mut self.params
    }

    pub fn head_targets(&self) -> &[usize] {
        &self.head_targets
    }

    pub fn head_names(&self) -> Vec<String> {
        self.head_targets.iter().map(|&j| self.schema.targets[j].name.clone()).collect()
    }

    pub fn raw_width(&self) -> usize {
        self.config.embedding_dims.iter().sum::<usize>() + self.schema.numeric_dim
    }

    pub fn deep_width(&self) -> usize {
        if self.config.trunk_depth == 0 {
            self.raw_width()
        } else {
            self.config.trunk_width
        }
    }

    /// `G_i` in its `l_i × |S_i|` layout: column `j` is token `j`'s embedding.
    pub fn embedding_matrix(&self, space: usize) -> Matrix {
        self.params.embeddings[space].transpose()
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    fn check_input(&self, rec: &EncodedRecord) -> Result<()> {
        if rec.sequences.len() != self.params.embeddings.len() {
            return Err(Error::Dimension(format!(
                "record has {} sequence spaces, model expects {}",
                rec.sequences.len(),
                self.params.embeddings.len()
            )));
        }
        if rec.numeric.len() != self.schema.numeric_dim {
            return Err(Error::Dimension(format!(
                "record has {} numeric values, model expects {}",
                rec.numeric.len(),
                self.schema.numeric_dim
            )));
        }
        for (seq, table) in rec.sequences.iter().zip(&self.params.embeddings) {
            if let Some(&bad) = seq.iter().find(|&&i| i as usize >= table.rows()) {
                return Err(Error::Dimension(format!("token index {bad} out of range for {} tokens", table.rows())));
            }
        }
        Ok(())
    }

    /// Per-head class distributions plus the trace needed by [`Self::backward`].
    /// Numerics in `rec` are raw; the model applies its own normalizer.
    pub fn forward(&self, rec: &EncodedRecord) -> Result<(Vec<Vec<f64>>, ForwardTrace)> {
        self.check_input(rec)?;
        let mut raw = vec![0.0; self.raw_width()];
        let mut offset = 0;
        let mut pooling = Vec::with_capacity(rec.sequences.len());
        for (seq, table) in rec.sequences.iter().zip(&self.params.embeddings) {
            let l = table.cols();
            let weights = pooling_weights(seq);
            pool_into(table, &weights, &mut raw[offset..offset + l]);
            pooling.push(weights);
            offset += l;
        }
        raw[offset..].copy_from_slice(&rec.numeric);
        self.normalizer.apply_in_place(&mut raw[offset..]);

        let mut layers: Vec<Vec<f64>> = Vec::with_capacity(self.params.trunk.len());
        for layer in &self.params.trunk {
            let input = layers.last().unwrap_or(&raw);
            let mut out = vec![0.0; layer.out_dim()];
            layer.forward_into(input, &mut out);
            out.iter_mut().filter(|v| **v < 0.0).for_each(|v| *v = 0.0);
            layers.push(out);
        }
        let deep = layers.last().unwrap_or(&raw);
        let probs: Vec<Vec<f64>> = self
            .params
            .heads
            .iter()
            .map(|h| {
                let mut z = vec![0.0; h.out_dim()];
                h.forward_into(deep, &mut z);
                softmax_in_place(&mut z);
                z
            })
            .collect();
        if probs.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("forward pass".into()));
        }
        let trace = ForwardTrace {
            stamp: self.stamp,
            input: rec.clone(),
            pooling,
            raw,
            layers,
            probs: probs.clone(),
        };
        Ok((probs, trace))
    }

    /// Gradients of `Σ_j w_j · CE_j` for one record; `targets` and `weights`
    /// are indexed by schema target.
    pub fn backward(&self, trace: &ForwardTrace, targets: &[usize], weights: &[f64]) -> Result<Params> {
        let mut grads = self.params.zeros_like();
        self.backward_into(trace, targets, weights, 1.0, &mut grads)?;
        Ok(grads)
    }

    /// Accumulates `scale ×` the record gradient into `grads`.
    pub fn backward_into(
        &self,
        trace: &ForwardTrace,
        targets: &[usize],
        weights: &[f64],
        scale: f64,
        grads: &mut Params,
    ) -> Result<()> {
        if trace.stamp != self.stamp {
            return Err(Error::StaleTrace);
        }
        let m = self.schema.targets.len();
        if targets.len() != m || weights.len() != m {
            return Err(Error::Dimension(format!("expected {m} targets and weights")));
        }
        let deep = trace.deep();
        let mut d_deep = vec![0.0; deep.len()];
        let mut dz = Vec::new();
        for (h, &j) in self.head_targets.iter().enumerate() {
            let p = &trace.probs[h];
            let label = targets[j];
            if label >= p.len() {
                return Err(Error::LabelOutOfRange { label, classes: p.len() });
            }
            let w = weights[j] * scale;
            dz.clear();
            dz.extend(p.iter().enumerate().map(|(c, &pc)| w * (pc - if c == label { 1.0 } else { 0.0 })));
            let g = &mut grads.heads[h];
            g.weight.add_outer(&dz, deep);
            for (b, d) in g.bias.iter_mut().zip(&dz) {
                *b += d;
            }
            self.params.heads[h].weight.matvec_t_acc(&dz, &mut d_deep);
        }

        let mut upstream = d_deep;
        for l in (0..self.params.trunk.len()).rev() {
            let out = &trace.layers[l];
            let input = if l == 0 { &trace.raw } else { &trace.layers[l - 1] };
            for (u, &o) in upstream.iter_mut().zip(out) {
                if o <= 0.0 {
                    *u = 0.0;
                }
            }
            let g = &mut grads.trunk[l];
            g.weight.add_outer(&upstream, input);
            for (b, d) in g.bias.iter_mut().zip(&upstream) {
                *b += d;
            }
            let mut down = vec![0.0; input.len()];
            self.params.trunk[l].weight.matvec_t_acc(&upstream, &mut down);
            upstream = down;
        }

        let mut offset = 0;
        for (i, weights) in trace.pooling.iter().enumerate() {
            let table = &mut grads.embeddings[i];
            let l = table.cols();
            let slice = &upstream[offset..offset + l];
            for &(idx, w) in weights {
                for (g, &d) in table.row_mut(idx as usize).iter_mut().zip(slice) {
                    *g += w * d;
                }
            }
            offset += l;
        }
        Ok(())
    }

    /// Copy keeping only the head for `target`, sharing no state with `self`.
    pub fn prune_to_single_head(&self, target: &str) -> Result<UserModel> {
        let j = self.schema.target_index(target)?;
        let h = self.head_targets.iter().position(|&t| t == j).ok_or_else(|| Error::UnknownTarget {
            name: target.to_string(),
            valid: self.head_names(),
        })?;
        let mut params = self.params.clone();
        params.heads = vec![params.heads.swap_remove(h)];
        Ok(Self { head_targets: vec![j], params, stamp: fresh_stamp(), ..self.clone() })
    }

    /// Most probable class per head (ties to the lowest index).
    pub fn predict(&self, rec: &EncodedRecord) -> Result<Vec<usize>> {
        let (probs, _) = self.forward(rec)?;
        Ok(probs.iter().map(|p| crate::numerics::argmax(p)).collect())
    }
}
