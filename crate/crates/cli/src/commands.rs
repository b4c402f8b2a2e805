use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use seqfuse_core::data::{load_jsonl, synth_generate, write_jsonl};
use seqfuse_core::evaluation::{compare_systems_with, fit_model, sweep_depth, sweep_embedding_size, Pretrained};
use seqfuse_core::model::{load_checkpoint, save_checkpoint};
use seqfuse_core::training::fine_tune;
use seqfuse_core::{DatasetSchema, Experiment, SynthConfig, TrainLog, UserModel, UserRecord};

use crate::{ConfigError, RunConfig, SweepKind};

pub struct LoadedData {
    pub records: Vec<UserRecord>,
    pub schema: DatasetSchema,
    pub truth: Option<SynthConfig>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value = serde_json::from_str(&text)
        .map_err(seqfuse_core::Error::from)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(value)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn prepare_out(cfg: &RunConfig, command: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    write_json(&cfg.out.join(format!("{command}_config.json")), cfg)
}

/// Reads the configured dataset, or generates it when no path is set.
pub fn load_data(cfg: &RunConfig) -> Result<LoadedData> {
    let Some(path) = &cfg.data.path else {
        let truth = cfg.data.synth.build();
        let (records, schema) = synth_generate(&truth)?;
        return Ok(LoadedData { records, schema, truth: Some(truth) });
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let schema_path = cfg.data.schema.clone().unwrap_or_else(|| dir.join("schema.json"));
    let schema: DatasetSchema = read_json(&schema_path)?;
    schema.validate().with_context(|| format!("schema {}", schema_path.display()))?;
    let records = load_jsonl(path, &schema).with_context(|| format!("loading {}", path.display()))?;
    let truth_path = cfg.data.truth.clone().or_else(|| Some(dir.join("truth.json")).filter(|p| p.exists()));
    let truth = match truth_path {
        Some(p) => Some(read_json::<SynthConfig>(&p)?),
        None => None,
    };
    Ok(LoadedData { records, schema, truth })
}

fn checkpoint_path(cfg: &RunConfig) -> PathBuf {
    cfg.checkpoint.clone().unwrap_or_else(|| cfg.out.join("model.json"))
}

fn load_model(path: &Path) -> Result<UserModel> {
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn experiment(cfg: &RunConfig, data: &LoadedData, model: Option<&UserModel>) -> Result<Experiment> {
    let exp = match model {
        Some(m) => {
            if m.schema() != &data.schema {
                return Err(seqfuse_core::Error::Schema("checkpoint schema differs from the dataset schema".into()).into());
            }
            Experiment::prepare_with_vocab(
                &data.records,
                &data.schema,
                cfg.fractions(),
                cfg.data.split_seed,
                m.vocab().clone(),
            )?
        }
        None => Experiment::prepare(&data.records, &data.schema, cfg.fractions(), cfg.data.split_seed, cfg.data.min_freq)?,
    };
    Ok(match &data.truth {
        Some(t) => exp.with_truth(t.clone()),
        None => exp,
    })
}

fn write_log(out: &Path, stem: &str, log: &TrainLog) -> Result<()> {
    write_text(&out.join(format!("{stem}.json")), &(log.to_json()? + "\n"))?;
    write_text(&out.join(format!("{stem}.csv")), &log.to_csv())?;
    write_text(&out.join(format!("{stem}_timings.csv")), &log.timings_csv())
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let truth = cfg.data.synth.build();
    let (records, schema) = synth_generate(&truth)?;
    prepare_out(cfg, "synth")?;
    write_jsonl(cfg.out.join("dataset.jsonl"), &records)?;
    write_json(&cfg.out.join("schema.json"), &schema)?;
    write_json(&cfg.out.join("truth.json"), &truth)?;
    println!("wrote {} records to {}", records.len(), cfg.out.join("dataset.jsonl").display());
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let data = load_data(cfg)?;
    let exp = experiment(cfg, &data, None)?;
    prepare_out(cfg, "train")?;
    let (model, log) = fit_model(&exp, &cfg.model, &cfg.train)?;
    let path = cfg.out.join("model.json");
    save_checkpoint(&model, &path)?;
    write_log(&cfg.out, "train_log", &log)?;
    println!(
        "trained {} parameters for {} epochs ({:?}); best epoch {} with validation loss {:.6}",
        model.param_count(),
        log.epochs.len(),
        log.stop_reason,
        log.best_epoch,
        log.best_val_loss
    );
    println!("checkpoint: {}", path.display());
    Ok(())
}

pub fn cmd_finetune(cfg: &RunConfig) -> Result<()> {
    let model = load_model(&checkpoint_path(cfg))?;
    let targets = if cfg.finetune.target == "all" {
        model.head_names()
    } else {
        model.schema().target_index(&cfg.finetune.target)?;
        vec![cfg.finetune.target.clone()]
    };
    let data = load_data(cfg)?;
    let exp = experiment(cfg, &data, Some(&model))?;
    prepare_out(cfg, "finetune")?;
    let dir = cfg.out.join("finetune");
    fs::create_dir_all(&dir)?;
    for t in &targets {
        let (ft, log) = fine_tune(&model, t, &exp.train, &exp.val, &cfg.train)?;
        save_checkpoint(&ft, dir.join(format!("{t}.json")))?;
        write_log(&dir, &format!("{t}_log"), &log)?;
        println!("{t}: {} epochs, best validation loss {:.6}", log.epochs.len(), log.best_val_loss);
    }
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let model = match &cfg.checkpoint {
        Some(p) => Some(load_model(p)?),
        None => None,
    };
    let mut finetuned = BTreeMap::new();
    for p in &cfg.eval.finetuned {
        let m = load_model(p)?;
        let heads = m.head_names();
        if heads.len() != 1 {
            bail!(seqfuse_core::Error::Checkpoint(format!("{} is not a single-target model", p.display())));
        }
        finetuned.insert(heads[0].clone(), m);
    }
    let data = load_data(cfg)?;
    let exp = experiment(cfg, &data, model.as_ref().or(finetuned.values().next()))?;
    prepare_out(cfg, "eval")?;
    let pretrained = Pretrained { model, finetuned };
    let report = compare_systems_with(&exp, &cfg.eval.systems, &cfg.eval_config(), cfg.model.seed, &pretrained)?;
    write_text(&cfg.out.join("report.json"), &(report.to_json()? + "\n"))?;
    let csv = report.to_csv();
    write_text(&cfg.out.join("report.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, kind: SweepKind) -> Result<()> {
    if cfg.jobs == 0 {
        return Err(ConfigError("jobs must be at least 1".into()).into());
    }
    let data = load_data(cfg)?;
    let exp = experiment(cfg, &data, None)?;
    prepare_out(cfg, "sweep")?;
    let base = cfg.eval_config();
    let seeds = &cfg.eval.seeds;
    let mut results = Vec::new();
    if matches!(kind, SweepKind::Embedding | SweepKind::All) {
        results.push(("sweep_embedding_size", sweep_embedding_size(&exp, &cfg.eval.embedding_grid, &base, seeds, cfg.jobs)?));
    }
    if matches!(kind, SweepKind::Depth | SweepKind::All) {
        results.push(("sweep_depth", sweep_depth(&exp, &cfg.eval.depth_grid, &base, seeds, cfg.jobs)?));
    }
    for (stem, r) in &results {
        write_text(&cfg.out.join(format!("{stem}.json")), &(r.to_json()? + "\n"))?;
        write_text(&cfg.out.join(format!("{stem}.csv")), &r.to_csv())?;
        println!("{stem}:");
        for &v in &r.grid {
            let mean = r.mean(v).expect("grid value has runs");
            let cells: Vec<String> = mean.iter().map(|a| format!("{:.2}", 100.0 * a)).collect();
            println!("  {v:>4}  {}", cells.join("  "));
        }
    }
    Ok(())
}
