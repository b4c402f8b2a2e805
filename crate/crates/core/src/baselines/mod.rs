//! Comparison systems: a constant majority predictor and two logistic
//! regression pipelines over per-space token distributions.
//!
//! The stacking pipeline feeds the raw distributions; the PCA pipeline
//! replaces each space's distribution block by its leading principal
//! components fitted on the training split. Both append z-scored numerics.

mod logreg;

pub use logreg::{fit_logreg, LogReg, LogRegConfig, LogRegFit};

use serde::{Deserialize, Serialize};

use crate::data::{EncodedRecord, Normalizer};
use crate::error::{Error, Result};
use crate::numerics::{argmax, pca_fit, Matrix, PcaModel};

/// Components kept per sequence space by the PCA pipeline (before clamping).
pub const PCA_COMPONENTS: usize = 50;

/// Normalized token counts over a vocabulary of `vocab_size` (UNK included).
///
/// An empty sequence maps to the zero vector.
pub fn sequence_to_distribution(indices: &[u32], vocab_size: usize) -> Vec<f64> {
    let mut out = vec![0.0; vocab_size];
    add_distribution(indices, &mut out);
    out
}

fn add_distribution(indices: &[u32], out: &mut [f64]) {
    if indices.is_empty() {
        return;
    }
    let mut counts = vec![0usize; out.len()];
    for &t in indices {
        counts[t as usize] += 1;
    }
    let n = indices.len() as f64;
    for (o, c) in out.iter_mut().zip(counts) {
        if c > 0 {
            *o = c as f64 / n;
        }
    }
}

/// Constant predictor of each target's most frequent training class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub classes: Vec<usize>,
}

impl MajorityModel {
    pub fn predict(&self) -> &[usize] {
        &self.classes
    }
}

/// Ties go to the lowest class index.
pub fn fit_majority(train: &[EncodedRecord], cardinalities: &[usize]) -> Result<MajorityModel> {
    if train.is_empty() {
        return Err(Error::Empty("majority training set"));
    }
    let mut counts: Vec<Vec<f64>> = cardinalities.iter().map(|&k| vec![0.0; k]).collect();
    for rec in train {
        if rec.targets.len() != cardinalities.len() {
            return Err(Error::Dimension(format!(
                "record has {} targets, expected {}",
                rec.targets.len(),
                cardinalities.len()
            )));
        }
        for (c, &y) in counts.iter_mut().zip(&rec.targets) {
            let classes = c.len();
            *c.get_mut(y).ok_or(Error::LabelOutOfRange { label: y, classes })? += 1.0;
        }
    }
    Ok(MajorityModel { classes: counts.iter().map(|c| argmax(c)).collect() })
}

/// Feature extraction shared by every per-target regression of a pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeaturePipeline {
    Stacking { vocab_sizes: Vec<usize>, normalizer: Normalizer },
    Pca { vocab_sizes: Vec<usize>, pcas: Vec<PcaModel>, normalizer: Normalizer },
}

/// Per-space distribution matrix of a dataset (`N × |S_i|`).
pub fn distribution_matrix(data: &[EncodedRecord], space: usize, vocab_size: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(data.len(), vocab_size);
    for (r, rec) in data.iter().enumerate() {
        let seq = rec
            .sequences
            .get(space)
            .ok_or_else(|| Error::Dimension(format!("record lacks sequence space {space}")))?;
        if let Some(&t) = seq.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(Error::Dimension(format!("token index {t} outside vocabulary of {vocab_size}")));
        }
        add_distribution(seq, m.row_mut(r));
    }
    Ok(m)
}

fn fit_normalizer(train: &[EncodedRecord], dim: usize) -> Result<Normalizer> {
    Normalizer::fit(train.iter().map(|r| r.numeric.as_slice()), dim)
}

impl FeaturePipeline {
    pub fn fit_stacking(train: &[EncodedRecord], vocab_sizes: &[usize], numeric_dim: usize) -> Result<Self> {
        Ok(Self::Stacking { vocab_sizes: vocab_sizes.to_vec(), normalizer: fit_normalizer(train, numeric_dim)? })
    }

    /// PCA is fitted on the training split only, `k` clamped per space.
    pub fn fit_pca(train: &[EncodedRecord], vocab_sizes: &[usize], numeric_dim: usize, k: usize) -> Result<Self> {
        let pcas = vocab_sizes
            .iter()
            .enumerate()
            .map(|(i, &size)| pca_fit(&distribution_matrix(train, i, size)?, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Pca { vocab_sizes: vocab_sizes.to_vec(), pcas, normalizer: fit_normalizer(train, numeric_dim)? })
    }

    fn parts(&self) -> (&[usize], &Normalizer) {
        match self {
            Self::Stacking { vocab_sizes, normalizer } | Self::Pca { vocab_sizes, normalizer, .. } => {
                (vocab_sizes, normalizer)
            }
        }
    }

    /// Width of each sequence block followed by the numeric width.
    pub fn block_widths(&self) -> Vec<usize> {
        let (sizes, norm) = self.parts();
        let mut w: Vec<usize> = match self {
            Self::Stacking { .. } => sizes.to_vec(),
            Self::Pca { pcas, .. } => pcas.iter().map(PcaModel::n_components).collect(),
        };
        w.push(norm.dim());
        w
    }

    pub fn width(&self) -> usize {
        self.block_widths().iter().sum()
    }

    /// Components actually kept per space (PCA pipeline only).
    pub fn pca_dims(&self) -> Option<Vec<usize>> {
        match self {
            Self::Stacking { .. } => None,
            Self::Pca { pcas, .. } => Some(pcas.iter().map(PcaModel::n_components).collect()),
        }
    }

    pub fn features(&self, rec: &EncodedRecord) -> Result<Vec<f64>> {
        let (sizes, norm) = self.parts();
        if rec.sequences.len() != sizes.len() {
            return Err(Error::Dimension(format!(
                "record has {} sequence spaces, pipeline expects {}",
                rec.sequences.len(),
                sizes.len()
            )));
        }
        if rec.numeric.len() != norm.dim() {
            return Err(Error::Dimension(format!(
                "record has {} numeric values, pipeline expects {}",
                rec.numeric.len(),
                norm.dim()
            )));
        }
        let mut out = Vec::with_capacity(self.width());
        for (i, (seq, &size)) in rec.sequences.iter().zip(sizes).enumerate() {
            if let Some(&t) = seq.iter().find(|&&t| t as usize >= size) {
                return Err(Error::Dimension(format!("token index {t} outside vocabulary of {size}")));
            }
            let dist = sequence_to_distribution(seq, size);
            match self {
                Self::Stacking { .. } => out.extend(dist),
                Self::Pca { pcas, .. } => {
                    let mut z = vec![0.0; pcas[i].n_components()];
                    pcas[i].project_row(&dist, &mut z);
                    out.extend(z);
                }
            }
        }
        out.extend(norm.apply(&rec.numeric));
        Ok(out)
    }

    pub fn matrix(&self, data: &[EncodedRecord]) -> Result<Matrix> {
        let width = self.width();
        let mut m = Matrix::zeros(data.len(), width);
        for (r, rec) in data.iter().enumerate() {
            m.row_mut(r).copy_from_slice(&self.features(rec)?);
        }
        Ok(m)
    }
}

/// One independent regression per target over a shared feature pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub pipeline: FeaturePipeline,
    pub heads: Vec<LogReg>,
}

impl LogRegModel {
    /// Fits every target of `cardinalities` on the pipeline's features,
    /// early-stopping each on `val`.
    pub fn fit(
        pipeline: FeaturePipeline,
        train: &[EncodedRecord],
        val: &[EncodedRecord],
        cardinalities: &[usize],
        cfg: &LogRegConfig,
    ) -> Result<Self> {
        let tx = pipeline.matrix(train)?;
        let vx = pipeline.matrix(val)?;
        let heads = cardinalities
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let ty = labels(train, j)?;
                let vy = labels(val, j)?;
                let val = if val.is_empty() { None } else { Some((&vx, vy.as_slice())) };
                fit_logreg(&tx, &ty, k, val, cfg).map(|(m, _)| m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { pipeline, heads })
    }

    pub fn predict(&self, rec: &EncodedRecord) -> Result<Vec<usize>> {
        let x = self.pipeline.features(rec)?;
        self.heads.iter().map(|h| h.predict(&x)).collect()
    }
}

fn labels(data: &[EncodedRecord], target: usize) -> Result<Vec<usize>> {
    data.iter()
        .map(|r| {
            r.targets
                .get(target)
                .copied()
                .ok_or_else(|| Error::Dimension(format!("record lacks target {target}")))
        })
        .collect()
}

#[cfg(test)]
mod tests;
