use std::collections::HashMap;

use super::schema::UserRecord;
use super::synth::SynthConfig;
use crate::error::{Error, Result};
use crate::numerics::{argmax, log_sum_exp};

/// Upper bound on the number of enumerated target tuples.
pub const MAX_ORACLE_TUPLES: u128 = 1_000_000;

/// Exact posterior classifier for data drawn from a known [`SynthConfig`].
///
/// Enumerates every joint class tuple, scores
/// `log p(tuple) + Σ log p(token | tuple) + log p(numeric | tuple)` and
/// predicts each target by the argmax of its marginal posterior.
pub struct BayesOracle<'a> {
    cfg: &'a SynthConfig,
    token_index: Vec<HashMap<String, usize>>,
    tuples: Vec<Vec<usize>>,
    log_priors: Vec<f64>,
    numeric_means: Vec<Vec<f64>>,
}

impl<'a> BayesOracle<'a> {
    pub fn new(cfg: &'a SynthConfig) -> Result<Self> {
        cfg.validate()?;
        let count: u128 = cfg.targets.iter().map(|t| t.classes.len() as u128).product();
        if count > MAX_ORACLE_TUPLES {
            return Err(Error::EnumerationBound { tuples: count, limit: MAX_ORACLE_TUPLES });
        }
        let token_index = cfg
            .sequences
            .iter()
            .map(|s| (0..s.vocab_size).map(|i| (SynthConfig::token_name(&s.name, i), i)).collect())
            .collect();

        let cards: Vec<usize> = cfg.targets.iter().map(|t| t.classes.len()).collect();
        let mut tuples = Vec::with_capacity(count as usize);
        let mut cur = vec![0usize; cards.len()];
        loop {
            tuples.push(cur.clone());
            // Mixed-radix increment, last target fastest.
            let mut j = cards.len();
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                cur[j] += 1;
                if cur[j] < cards[j] {
                    break;
                }
                cur[j] = 0;
            }
            if cur.iter().all(|&c| c == 0) {
                break;
            }
        }
        let log_priors = tuples
            .iter()
            .map(|tu| tu.iter().enumerate().map(|(j, &c)| cfg.targets[j].marginal[c].ln()).sum())
            .collect();
        let numeric_means = tuples
            .iter()
            .map(|tu| {
                (0..cfg.numeric.dim)
                    .map(|d| tu.iter().enumerate().map(|(j, &c)| cfg.numeric.class_means[j][c][d]).sum())
                    .collect()
            })
            .collect();
        Ok(Self { cfg, token_index, tuples, log_priors, numeric_means })
    }

    /// Normalized log marginal posterior per target and class.
    pub fn log_posteriors(&self, record: &UserRecord) -> Result<Vec<Vec<f64>>> {
        let cfg = self.cfg;
        let m = cfg.targets.len();
        // token multiset per space: (vocab index, count)
        let mut spaces = Vec::with_capacity(cfg.sequences.len());
        for (s, index) in cfg.sequences.iter().zip(&self.token_index) {
            let tokens = record
                .sequences
                .get(&s.name)
                .ok_or_else(|| Error::Schema(format!("missing sequence `{}`", s.name)))?;
            let mut counts: HashMap<usize, f64> = HashMap::new();
            for t in tokens {
                let i = *index
                    .get(t)
                    .ok_or_else(|| Error::Schema(format!("token `{t}` not in generator vocabulary")))?;
                *counts.entry(i).or_default() += 1.0;
            }
            let mut counts: Vec<(usize, f64)> = counts.into_iter().collect();
            counts.sort_by_key(|&(i, _)| i);
            spaces.push(counts);
        }
        if record.numeric.len() != cfg.numeric.dim {
            return Err(Error::Dimension("numeric length differs from generator".into()));
        }

        // Gathered topic columns: contrib[space][target][class][u] for the distinct tokens u.
        let contrib: Vec<Vec<Vec<Vec<f64>>>> = cfg
            .sequences
            .iter()
            .zip(&spaces)
            .map(|(s, counts)| {
                s.topics
                    .iter()
                    .map(|pc| pc.iter().map(|topic| counts.iter().map(|&(i, _)| topic[i]).collect()).collect())
                    .collect()
            })
            .collect();

        let sigma = cfg.numeric.noise_sigma;
        let mut scores = Vec::with_capacity(self.tuples.len());
        let mut mix = Vec::new();
        for (ti, tuple) in self.tuples.iter().enumerate() {
            let mut score = self.log_priors[ti];
            for (si, s) in cfg.sequences.iter().enumerate() {
                let counts = &spaces[si];
                let lambda = s.background_weight;
                mix.clear();
                mix.resize(counts.len(), 0.0);
                for (j, &c) in tuple.iter().enumerate() {
                    for (acc, v) in mix.iter_mut().zip(&contrib[si][j][c]) {
                        *acc += v;
                    }
                }
                let w = (1.0 - lambda) / m as f64;
                for (&(i, n), &acc) in counts.iter().zip(&mix) {
                    score += n * (lambda * s.background[i] + w * acc).ln();
                }
            }
            let means = &self.numeric_means[ti];
            if sigma > 0.0 {
                let sq: f64 = record.numeric.iter().zip(means).map(|(x, mu)| (x - mu) * (x - mu)).sum();
                score -= sq / (2.0 * sigma * sigma);
            } else if record.numeric.iter().zip(means).any(|(x, mu)| (x - mu).abs() > 1e-9 * (1.0 + mu.abs())) {
                score = f64::NEG_INFINITY;
            }
            scores.push(score);
        }

        let total = log_sum_exp(&scores);
        let mut out = Vec::with_capacity(m);
        for (j, t) in cfg.targets.iter().enumerate() {
            let mut per_class = vec![Vec::new(); t.classes.len()];
            for (tuple, &s) in self.tuples.iter().zip(&scores) {
                per_class[tuple[j]].push(s);
            }
            out.push(per_class.iter().map(|v| log_sum_exp(v) - total).collect());
        }
        Ok(out)
    }

    /// Posterior-argmax class per target; ties go to the lowest index.
    pub fn predict(&self, record: &UserRecord) -> Result<Vec<usize>> {
        Ok(self.log_posteriors(record)?.iter().map(|lp| argmax(lp)).collect())
    }
}

/// One-shot convenience wrapper around [`BayesOracle`].
pub fn bayes_oracle(cfg: &SynthConfig, record: &UserRecord) -> Result<Vec<usize>> {
    BayesOracle::new(cfg)?.predict(record)
}
