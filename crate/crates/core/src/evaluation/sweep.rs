use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{fit_model, model_accuracies, EvalConfig, Experiment};
use crate::error::{Error, Result};

/// Embedding size used while sweeping depth.
pub const DEPTH_SWEEP_EMBEDDING: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Both sequence embedding sizes set to the grid value.
    EmbeddingSize,
    TrunkDepth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: usize,
    pub seed: u64,
    pub initial_val_loss: f64,
    pub epochs: usize,
    /// Test accuracy per target.
    pub accuracies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParam,
    pub grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub targets: Vec<String>,
    pub dataset_fingerprint: String,
    /// Grid-major, then seed order.
    pub runs: Vec<SweepRun>,
}

impl SweepResult {
    fn runs_at(&self, value: usize) -> impl Iterator<Item = &SweepRun> {
        self.runs.iter().filter(move |r| r.value == value)
    }

    /// Seed-averaged accuracy per target at a grid value.
    pub fn mean(&self, value: usize) -> Option<Vec<f64>> {
        let runs: Vec<&SweepRun> = self.runs_at(value).collect();
        if runs.is_empty() {
            return None;
        }
        let n = runs.len() as f64;
        Some(
            (0..self.targets.len())
                .map(|j| runs.iter().map(|r| r.accuracies[j]).sum::<f64>() / n)
                .collect(),
        )
    }

    /// Per-target `(min, max)` over seeds at a grid value.
    pub fn range(&self, value: usize) -> Option<Vec<(f64, f64)>> {
        let runs: Vec<&SweepRun> = self.runs_at(value).collect();
        if runs.is_empty() {
            return None;
        }
        Some(
            (0..self.targets.len())
                .map(|j| {
                    runs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                        (lo.min(r.accuracies[j]), hi.max(r.accuracies[j]))
                    })
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per (grid value, target, seed).
    pub fn to_csv(&self) -> String {
        let name = match self.parameter {
            SweepParam::EmbeddingSize => "embedding_size",
            SweepParam::TrunkDepth => "trunk_depth",
        };
        let mut s = format!("{name},target,seed,accuracy\n");
        for &v in &self.grid {
            for (j, t) in self.targets.iter().enumerate() {
                for r in self.runs_at(v) {
                    writeln!(s, "{v},{t},{},{:.6}", r.seed, r.accuracies[j]).unwrap();
                }
            }
        }
        s
    }
}

/// Trains one fresh model per (grid value, seed) and records test
/// accuracies. Runs are spread over `jobs` threads; results do not depend
/// on `jobs`.
pub fn sweep(
    exp: &Experiment,
    parameter: SweepParam,
    grid: &[usize],
    base: &EvalConfig,
    seeds: &[u64],
    jobs: usize,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let tasks: Vec<(usize, u64)> = grid.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let configs = tasks
        .iter()
        .map(|&(v, s)| {
            let mut c = base.reseeded(s);
            match parameter {
                SweepParam::EmbeddingSize => c.model.embedding_dims = vec![v; exp.schema.sequence_names.len()],
                SweepParam::TrunkDepth => c.model.trunk_depth = v,
            }
            c.model.validate(&exp.schema).map(|_| c)
        })
        .collect::<Result<Vec<_>>>()?;

    let run_one = |i: usize| -> Result<SweepRun> {
        let c = &configs[i];
        let (model, log) = fit_model(exp, &c.model, &c.train)?;
        Ok(SweepRun {
            value: tasks[i].0,
            seed: tasks[i].1,
            initial_val_loss: log.initial_val_loss,
            epochs: log.epochs.len(),
            accuracies: model_accuracies(&model, &exp.test)?,
        })
    };

    let slots: Vec<Mutex<Option<Result<SweepRun>>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, tasks.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let r = run_one(i);
                *slots[i].lock().expect("sweep slot poisoned") = Some(r);
            });
        }
    });
    let runs = slots
        .into_iter()
        .map(|s| s.into_inner().expect("sweep slot poisoned").expect("every task ran"))
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult {
        parameter,
        grid: grid.to_vec(),
        seeds: seeds.to_vec(),
        targets: exp.schema.target_names(),
        dataset_fingerprint: exp.fingerprint.clone(),
        runs,
    })
}

pub fn sweep_embedding_size(
    exp: &Experiment,
    grid: &[usize],
    base: &EvalConfig,
    seeds: &[u64],
    jobs: usize,
) -> Result<SweepResult> {
    sweep(exp, SweepParam::EmbeddingSize, grid, base, seeds, jobs)
}

/// Depth sweep with both embedding sizes pinned to 50.
pub fn sweep_depth(exp: &Experiment, grid: &[usize], base: &EvalConfig, seeds: &[u64], jobs: usize) -> Result<SweepResult> {
    let mut base = base.clone();
    base.model.embedding_dims = vec![DEPTH_SWEEP_EMBEDDING; exp.schema.sequence_names.len()];
    sweep(exp, SweepParam::TrunkDepth, grid, &base, seeds, jobs)
}
