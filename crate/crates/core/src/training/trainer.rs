use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, OptimizerState};
use crate::data::EncodedRecord;
use crate::error::{Error, Result};
use crate::model::{Params, UserModel};
use crate::numerics::{argmax, cross_entropy, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineTuneConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, max_epochs: 100, patience: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub patience: usize,
    pub min_delta: f64,
    /// Per-target loss weights in schema order; `None` means all ones.
    pub loss_weights: Option<Vec<f64>>,
    pub seed: u64,
    pub fine_tune: FineTuneConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 500,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 20,
            min_delta: 1e-4,
            loss_weights: None,
            seed: 0,
            fine_tune: FineTuneConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::Config("max_epochs, batch_size and patience must be at least 1".into()));
        }
        if self.fine_tune.max_epochs == 0 || self.fine_tune.patience == 0 {
            return Err(Error::Config("fine_tune max_epochs and patience must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !(self.fine_tune.learning_rate >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { beta1: self.beta1, beta2: self.beta2, epsilon: self.epsilon }
    }

    pub fn weights(&self, n_targets: usize) -> Result<Vec<f64>> {
        match &self.loss_weights {
            None => Ok(vec![1.0; n_targets]),
            Some(w) if w.len() == n_targets => Ok(w.clone()),
            Some(w) => Err(Error::Config(format!("{} loss weights for {n_targets} targets", w.len()))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Validation accuracy per head.
    pub val_accuracy: Vec<f64>,
}

/// Per-epoch history. Wall-clock times are kept out of the serialized form
/// so that logs of identical runs compare equal byte for byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainLog {
    pub heads: Vec<String>,
    pub initial_val_loss: f64,
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were returned; 0 means the starting parameters.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
    #[serde(skip)]
    pub wall_times: Vec<f64>,
}

impl TrainLog {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss");
        for h in &self.heads {
            let _ = write!(s, ",val_acc_{h}");
        }
        s.push('\n');
        for e in &self.epochs {
            let _ = write!(s, "{},{},{}", e.epoch, e.train_loss, e.val_loss);
            for a in &e.val_accuracy {
                let _ = write!(s, ",{a}");
            }
            s.push('\n');
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from("epoch,wall_time_s\n");
        for (e, t) in self.epochs.iter().zip(&self.wall_times) {
            let _ = writeln!(s, "{},{t}", e.epoch);
        }
        s
    }
}

/// `Σ_j w_j · CE_j` over per-target distributions.
pub fn multitask_loss(probs: &[Vec<f64>], targets: &[usize], weights: &[f64]) -> Result<f64> {
    if probs.len() != targets.len() || probs.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} distributions, {} labels, {} weights",
            probs.len(),
            targets.len(),
            weights.len()
        )));
    }
    let mut total = 0.0;
    for ((p, &t), &w) in probs.iter().zip(targets).zip(weights) {
        total += w * cross_entropy(p, t)?;
    }
    Ok(total)
}

fn head_loss(model: &UserModel, probs: &[Vec<f64>], rec: &EncodedRecord, weights: &[f64]) -> Result<f64> {
    let heads = model.head_targets();
    let labels: Vec<usize> = heads.iter().map(|&j| rec.targets[j]).collect();
    let w: Vec<f64> = heads.iter().map(|&j| weights[j]).collect();
    multitask_loss(probs, &labels, &w)
}

/// Mean loss and mean gradient over `batch`; the gradient is written into `grads`.
pub fn batch_gradient(
    model: &UserModel,
    batch: &[&EncodedRecord],
    weights: &[f64],
    grads: &mut Params,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    grads.fill_zero();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for rec in batch {
        let (probs, trace) = model.forward(rec)?;
        loss += head_loss(model, &probs, rec, weights)?;
        model.backward_into(&trace, &rec.targets, weights, scale, grads)?;
    }
    Ok(loss * scale)
}

/// Mean weighted loss and per-head accuracy over `data`.
pub fn evaluate(model: &UserModel, data: &[EncodedRecord], weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation data"));
    }
    let heads = model.head_targets();
    let mut loss = 0.0;
    let mut correct = vec![0usize; heads.len()];
    for rec in data {
        let (probs, _) = model.forward(rec)?;
        loss += head_loss(model, &probs, rec, weights)?;
        for (h, &j) in heads.iter().enumerate() {
            if argmax(&probs[h]) == rec.targets[j] {
                correct[h] += 1;
            }
        }
    }
    let n = data.len() as f64;
    Ok((loss / n, correct.iter().map(|&c| c as f64 / n).collect()))
}

/// Patience-based stopping on a monitored loss.
///
/// The patience counter resets only on improvements larger than
/// `min_delta`; the best snapshot tracks the exact minimum.
#[derive(Clone, Debug)]
pub struct EarlyStopper {
    patience: usize,
    min_delta: f64,
    reference: f64,
    since_improvement: usize,
    pub best: f64,
    pub best_epoch: usize,
}

impl EarlyStopper {
    /// `initial` is the loss of the starting parameters (epoch 0).
    pub fn new(patience: usize, min_delta: f64, initial: f64) -> Self {
        Self { patience, min_delta, reference: f64::INFINITY, since_improvement: 0, best: initial, best_epoch: 0 }
    }

    /// Returns `(new_best, stop)`.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> (bool, bool) {
        let new_best = loss < self.best;
        if new_best {
            self.best = loss;
            self.best_epoch = epoch;
        }
        if loss < self.reference - self.min_delta {
            self.reference = loss;
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
        }
        (new_best, self.since_improvement >= self.patience)
    }
}

struct Schedule {
    learning_rate: f64,
    max_epochs: usize,
    patience: usize,
}

/// Overflow inside the forward pass surfaces as a divergence of the run.
fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(detail) => Error::Divergence { epoch, detail },
        other => other,
    }
}

fn run(
    mut model: UserModel,
    train_set: &[EncodedRecord],
    val_set: &[EncodedRecord],
    weights: &[f64],
    schedule: Schedule,
    cfg: &TrainConfig,
) -> Result<(UserModel, TrainLog)> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Empty("training and validation splits must be non-empty"));
    }
    let adam = cfg.adam();
    let mut state = OptimizerState::new(model.params());
    let mut grads = model.params().zeros_like();
    let (initial_val_loss, _) = evaluate(&model, val_set, weights)?;
    if !initial_val_loss.is_finite() {
        return Err(Error::Divergence { epoch: 0, detail: "initial validation loss is not finite".into() });
    }
    let mut stopper = EarlyStopper::new(schedule.patience, cfg.min_delta, initial_val_loss);
    let mut best_params = model.params().clone();
    let shuffle = Rng::new(cfg.seed).stream("shuffle");
    let mut epochs = Vec::new();
    let mut wall_times = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=schedule.max_epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        shuffle.substream(epoch as u64).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&EncodedRecord> = chunk.iter().map(|&i| &train_set[i]).collect();
            let loss = batch_gradient(&model, &batch, weights, &mut grads).map_err(|e| diverged(epoch, e))?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, detail: format!("batch loss {loss}") });
            }
            loss_sum += loss * batch.len() as f64;
            adam_step(model.params_mut(), &grads, &mut state, schedule.learning_rate, &adam)?;
        }
        if model.params().slices().iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::Divergence { epoch, detail: "non-finite parameters".into() });
        }
        let (val_loss, val_accuracy) = evaluate(&model, val_set, weights).map_err(|e| diverged(epoch, e))?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch, detail: format!("validation loss {val_loss}") });
        }
        epochs.push(EpochLog { epoch, train_loss: loss_sum / train_set.len() as f64, val_loss, val_accuracy });
        wall_times.push(started.elapsed().as_secs_f64());
        let (new_best, stop) = stopper.observe(epoch, val_loss);
        if new_best {
            best_params = model.params().clone();
        }
        if stop {
            stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    *model.params_mut() = best_params;
    let log = TrainLog {
        heads: model.head_names(),
        initial_val_loss,
        epochs,
        best_epoch: stopper.best_epoch,
        best_val_loss: stopper.best,
        stop_reason,
        wall_times,
    };
    Ok((model, log))
}

/// Trains all heads jointly on the weighted sum of their cross-entropies and
/// returns the parameters of the best validation epoch.
pub fn train(
    model: UserModel,
    train_set: &[EncodedRecord],
    val_set: &[EncodedRecord],
    cfg: &TrainConfig,
) -> Result<(UserModel, TrainLog)> {
    cfg.validate()?;
    let weights = cfg.weights(model.schema().targets.len())?;
    let schedule = Schedule { learning_rate: cfg.learning_rate, max_epochs: cfg.max_epochs, patience: cfg.patience };
    run(model, train_set, val_set, &weights, schedule, cfg)
}

/// Drops every head except `target` and keeps training all remaining
/// parameters on that target alone with the fine-tuning schedule.
pub fn fine_tune(
    model: &UserModel,
    target: &str,
    train_set: &[EncodedRecord],
    val_set: &[EncodedRecord],
    cfg: &TrainConfig,
) -> Result<(UserModel, TrainLog)> {
    cfg.validate()?;
    let pruned = model.prune_to_single_head(target)?;
    let mut weights = vec![0.0; pruned.schema().targets.len()];
    weights[pruned.head_targets()[0]] = 1.0;
    let ft = &cfg.fine_tune;
    let schedule = Schedule { learning_rate: ft.learning_rate, max_epochs: ft.max_epochs, patience: ft.patience };
    run(pruned, train_set, val_set, &weights, schedule, cfg)
}
