//! Test-split accuracy reports across systems and design-parameter sweeps.

mod sweep;

pub use sweep::{sweep, sweep_depth, sweep_embedding_size, SweepParam, SweepResult, SweepRun};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_majority, FeaturePipeline, LogRegConfig, LogRegModel, PCA_COMPONENTS};
use crate::data::{
    build_vocab, encode_all, fingerprint, split, BayesOracle, DatasetSchema, EncodedRecord, Normalizer, SynthConfig,
    UserRecord, Vocabulary,
};
use crate::error::{Error, Result};
use crate::model::{init_model, ModelConfig, UserModel};
use crate::training::{fine_tune, train, TrainConfig, TrainLog};

/// Printed under every report: absolute accuracies on synthetic data say
/// nothing about any published figure obtained on private data.
pub const REPORT_NOTICE: &str = "Accuracies are measured on the dataset identified above. Published absolute \
accuracies were obtained on proprietary data and are not reproducible here; only relative orderings are comparable.";

/// Exact-match fraction.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Empty("accuracy input"));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    ArgMax,
    Stacking,
    Pca,
    Model,
    ModelFinetuned,
    BayesOracle,
}

impl System {
    pub const ALL: [System; 6] =
        [System::ArgMax, System::Stacking, System::Pca, System::Model, System::ModelFinetuned, System::BayesOracle];

    /// Row label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            System::ArgMax => "baseline:arg-max",
            System::Stacking => "baseline:stacking",
            System::Pca => "baseline:pca",
            System::Model => "model",
            System::ModelFinetuned => "model:fine-tuned",
            System::BayesOracle => "bayes-oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|sys| sys.label() == s || serde_json::to_value(sys).is_ok_and(|v| v == s))
            .ok_or_else(|| Error::Config(format!("unknown system {s:?}")))
    }
}

/// Encoded train/val/test splits sharing one vocabulary built on train.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub schema: DatasetSchema,
    pub vocab: Vocabulary,
    pub train: Vec<EncodedRecord>,
    pub val: Vec<EncodedRecord>,
    pub test: Vec<EncodedRecord>,
    /// Unencoded test records, needed by the oracle which works on tokens.
    pub test_raw: Vec<UserRecord>,
    pub fingerprint: String,
    /// Generator parameters when the data is synthetic.
    pub truth: Option<SynthConfig>,
}

impl Experiment {
    pub fn prepare(
        records: &[UserRecord],
        schema: &DatasetSchema,
        fractions: (f64, f64, f64),
        split_seed: u64,
        min_freq: usize,
    ) -> Result<Self> {
        schema.validate()?;
        let (train, _, _) = split(records, fractions, split_seed)?;
        let vocab = build_vocab(&train, schema, min_freq);
        Self::prepare_with_vocab(records, schema, fractions, split_seed, vocab)
    }

    /// Like [`Experiment::prepare`] but encodes with an existing vocabulary,
    /// typically the one stored in a checkpoint.
    pub fn prepare_with_vocab(
        records: &[UserRecord],
        schema: &DatasetSchema,
        fractions: (f64, f64, f64),
        split_seed: u64,
        vocab: Vocabulary,
    ) -> Result<Self> {
        schema.validate()?;
        if vocab.spaces.len() != schema.sequence_names.len()
            || vocab.spaces.iter().zip(&schema.sequence_names).any(|(v, n)| &v.name != n)
        {
            return Err(Error::Schema("vocabulary spaces do not match the schema".into()));
        }
        let (train, val, test) = split(records, fractions, split_seed)?;
        Ok(Self {
            schema: schema.clone(),
            train: encode_all(&train, &vocab, schema),
            val: encode_all(&val, &vocab, schema),
            test: encode_all(&test, &vocab, schema),
            vocab,
            test_raw: test,
            fingerprint: fingerprint(records),
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: SynthConfig) -> Self {
        self.truth = Some(truth);
        self
    }

    /// `[target][record]` labels of the test split.
    pub fn test_labels(&self) -> Vec<Vec<usize>> {
        (0..self.schema.targets.len()).map(|j| self.test.iter().map(|r| r.targets[j]).collect()).collect()
    }
}

/// Everything that configures a comparison run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub logreg: LogRegConfig,
    pub pca_components: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            logreg: LogRegConfig::default(),
            pca_components: PCA_COMPONENTS,
        }
    }
}

impl EvalConfig {
    /// Copy with every seed set to `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.model.seed = seed;
        c.train.seed = seed;
        c.logreg.seed = seed;
        c
    }
}

/// Initializes a model on the experiment's training split and trains it.
pub fn fit_model(exp: &Experiment, model: &ModelConfig, cfg: &TrainConfig) -> Result<(UserModel, TrainLog)> {
    let normalizer = Normalizer::fit(exp.train.iter().map(|r| r.numeric.as_slice()), exp.schema.numeric_dim)?;
    let m = init_model(model, &exp.schema, &exp.vocab, &normalizer)?;
    train(m, &exp.train, &exp.val, cfg)
}

/// Per-head test accuracies of `model`, in head order.
pub fn model_accuracies(model: &UserModel, test: &[EncodedRecord]) -> Result<Vec<f64>> {
    let heads = model.head_targets();
    let mut preds = vec![Vec::with_capacity(test.len()); heads.len()];
    for rec in test {
        for (p, c) in preds.iter_mut().zip(model.predict(rec)?) {
            p.push(c);
        }
    }
    heads
        .iter()
        .zip(&preds)
        .map(|(&j, p)| accuracy(p, &test.iter().map(|r| r.targets[j]).collect::<Vec<_>>()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub system: String,
    /// One cell per target; `None` marks an absent system/target pair.
    pub accuracies: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub targets: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub config: EvalConfig,
    pub param_count: Option<usize>,
    pub pca_dims: Option<Vec<usize>>,
    pub notice: String,
}

impl EvalReport {
    pub fn row(&self, system: System) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.system == system.label())
    }

    pub fn get(&self, system: System, target: &str) -> Option<f64> {
        let j = self.targets.iter().position(|t| t == target)?;
        self.row(system)?.accuracies[j]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Systems as rows, targets as columns, metadata as `#` footer lines.
    pub fn to_csv(&self) -> String {
        let mut s = format!("system,{}\n", self.targets.join(","));
        for row in &self.rows {
            s.push_str(&row.system);
            for a in &row.accuracies {
                match a {
                    Some(v) => write!(s, ",{v:.6}").unwrap(),
                    None => s.push_str(",NA"),
                }
            }
            s.push('\n');
        }
        writeln!(s, "# seed: {}", self.seed).unwrap();
        writeln!(s, "# dataset sha256: {}", self.dataset_fingerprint).unwrap();
        if let Some(n) = self.param_count {
            writeln!(s, "# model parameters: {n}").unwrap();
        }
        if let Some(d) = &self.pca_dims {
            let dims: Vec<String> = d.iter().map(ToString::to_string).collect();
            writeln!(s, "# pca components per space: {}", dims.join(" ")).unwrap();
        }
        writeln!(s, "# {}", self.notice).unwrap();
        s
    }
}

/// Already trained models that [`compare_systems_with`] reuses instead of
/// training its own.
#[derive(Clone, Debug, Default)]
pub struct Pretrained {
    pub model: Option<UserModel>,
    /// Single-head models keyed by target name.
    pub finetuned: BTreeMap<String, UserModel>,
}

/// Trains every requested system on the experiment's train/val splits
/// and reports test accuracies.
pub fn compare_systems(exp: &Experiment, systems: &[System], cfg: &EvalConfig, seed: u64) -> Result<EvalReport> {
    compare_systems_with(exp, systems, cfg, seed, &Pretrained::default())
}

fn check_model(exp: &Experiment, m: &UserModel) -> Result<()> {
    if m.schema() != &exp.schema || m.vocab() != &exp.vocab {
        return Err(Error::Schema("pretrained model was built for a different schema or vocabulary".into()));
    }
    Ok(())
}

pub fn compare_systems_with(
    exp: &Experiment,
    systems: &[System],
    cfg: &EvalConfig,
    seed: u64,
    pretrained: &Pretrained,
) -> Result<EvalReport> {
    let cfg = cfg.reseeded(seed);
    let targets = exp.schema.target_names();
    let cards = exp.schema.cardinalities();
    let labels = exp.test_labels();
    let sizes = exp.vocab.sizes();
    let p = exp.schema.numeric_dim;
    let mut rows = Vec::new();
    let mut param_count = None;
    let mut pca_dims = None;
    let mut model: Option<UserModel> = pretrained.model.clone();
    if let Some(m) = &model {
        check_model(exp, m)?;
        param_count = Some(m.param_count());
    }

    let all = |acc: Vec<f64>| acc.into_iter().map(Some).collect::<Vec<_>>();
    for &sys in systems {
        let accuracies = match sys {
            System::ArgMax => {
                let m = fit_majority(&exp.train, &cards)?;
                let acc = labels
                    .iter()
                    .zip(m.predict())
                    .map(|(l, &c)| accuracy(&vec![c; l.len()], l))
                    .collect::<Result<Vec<_>>>()?;
                all(acc)
            }
            System::Stacking | System::Pca => {
                let pipeline = if sys == System::Stacking {
                    FeaturePipeline::fit_stacking(&exp.train, &sizes, p)?
                } else {
                    let pl = FeaturePipeline::fit_pca(&exp.train, &sizes, p, cfg.pca_components)?;
                    pca_dims = pl.pca_dims();
                    pl
                };
                let m = LogRegModel::fit(pipeline, &exp.train, &exp.val, &cards, &cfg.logreg)?;
                let mut preds = vec![Vec::with_capacity(exp.test.len()); cards.len()];
                for rec in &exp.test {
                    for (p, c) in preds.iter_mut().zip(m.predict(rec)?) {
                        p.push(c);
                    }
                }
                all(preds.iter().zip(&labels).map(|(p, l)| accuracy(p, l)).collect::<Result<_>>()?)
            }
            System::Model | System::ModelFinetuned => {
                let needs_model =
                    sys == System::Model || targets.iter().any(|t| !pretrained.finetuned.contains_key(t));
                if needs_model && model.is_none() {
                    let (m, _) = fit_model(exp, &cfg.model, &cfg.train)?;
                    param_count = Some(m.param_count());
                    model = Some(m);
                }
                if sys == System::Model {
                    all(model_accuracies(model.as_ref().expect("model trained above"), &exp.test)?)
                } else {
                    let mut acc = Vec::with_capacity(targets.len());
                    for t in &targets {
                        let ft = match pretrained.finetuned.get(t) {
                            Some(ft) => {
                                check_model(exp, ft)?;
                                if ft.head_names() != [t.clone()] {
                                    return Err(Error::Schema(format!("fine-tuned model for {t} has other heads")));
                                }
                                ft.clone()
                            }
                            None => {
                                let m = model.as_ref().expect("model trained above");
                                fine_tune(m, t, &exp.train, &exp.val, &cfg.train)?.0
                            }
                        };
                        acc.push(Some(model_accuracies(&ft, &exp.test)?[0]));
                    }
                    acc
                }
            }
            System::BayesOracle => match &exp.truth {
                Some(truth) => {
                    if truth.schema() != exp.schema {
                        return Err(Error::Schema("generator parameters do not match the dataset schema".into()));
                    }
                    let oracle = BayesOracle::new(truth)?;
                    let mut preds = vec![Vec::with_capacity(exp.test.len()); cards.len()];
                    for rec in &exp.test_raw {
                        for (p, c) in preds.iter_mut().zip(oracle.predict(rec)?) {
                            p.push(c);
                        }
                    }
                    all(preds.iter().zip(&labels).map(|(p, l)| accuracy(p, l)).collect::<Result<_>>()?)
                }
                None => vec![None; targets.len()],
            },
        };
        rows.push(ReportRow { system: sys.label().to_string(), accuracies });
    }
    Ok(EvalReport {
        targets,
        rows,
        seed,
        dataset_fingerprint: exp.fingerprint.clone(),
        config: cfg,
        param_count,
        pca_dims,
        notice: REPORT_NOTICE.to_string(),
    })
}
