//! Desk-scale contrastive trainer.
//!
//! A linear [`ToyEmbeddingModel`] over fixed input features is trained with
//! InfoNCE on planned micro-batches using plain gradient descent. Validation
//! runs every `validation_interval` optimizer steps and, in early-stopping
//! mode, training halts once `patience` consecutive validations fail to beat
//! the best accuracy; the best checkpoint is returned.

mod early_stop;
mod loss;
mod model;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::dataset::RetrievalDataset;
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::planner::{group_batches, BatchRecord};
use crate::seed;
use crate::similarity::{chunk_partition, evaluate, EvalReport, Scope};
use crate::QueryId;

pub use early_stop::{EarlyStopping, Verdict};
pub use loss::{info_nce_from_scores, info_nce_loss, loss_gradient, record_loss, FeatureRecord, RecordGradient};
pub use model::ToyEmbeddingModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ValidationScope {
    FullCorpus,
    PerBatch { batch_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop after `patience` non-improving validations; return the best checkpoint.
    EarlyStopping,
    /// Train until the windowed loss improvement falls below the tolerance;
    /// return the final model.
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub temperature: f64,
    pub learning_rate: f64,
    pub k_soft: usize,
    pub k_hard: usize,
    pub grad_accum_steps: usize,
    pub validation_interval: usize,
    pub patience: usize,
    pub max_steps: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    pub validation_scope: ValidationScope,
    pub stop_rule: StopRule,
    pub convergence_window: usize,
    pub convergence_tolerance: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            temperature: 0.07,
            learning_rate: 2e-5,
            k_soft: 5,
            k_hard: 5,
            grad_accum_steps: 2,
            validation_interval: 100,
            patience: 3,
            max_steps: 1000,
            embedding_dim: 16,
            seed: seed::DEFAULT_SEED,
            validation_scope: ValidationScope::FullCorpus,
            stop_rule: StopRule::EarlyStopping,
            convergence_window: 50,
            convergence_tolerance: 1e-5,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be non-negative");
        }
        if self.validation_interval == 0 {
            return bad("validation interval must be at least 1");
        }
        if self.grad_accum_steps == 0 {
            return bad("gradient accumulation steps must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.embedding_dim < 2 {
            return bad("embedding dimension must be at least 2");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if self.convergence_window == 0 {
            return bad("convergence window must be at least 1");
        }
        if let ValidationScope::PerBatch { batch_size: 0 } = self.validation_scope {
            return bad("validation batch size must be at least 1");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = canonical::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text).map_err(|e| Error::parse("trainer config", e))?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub step: usize,
    pub accuracy: f64,
    pub total_correct: usize,
    pub total_queries: usize,
    pub lowest_positive_match_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    Converged,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub initial_accuracy: f64,
    pub steps: Vec<StepRecord>,
    pub validations: Vec<ValidationRecord>,
    pub stop_step: usize,
    pub stop_reason: StopReason,
    pub best_step: usize,
    pub best_accuracy: f64,
    /// Step whose parameters were returned.
    pub returned_step: usize,
    pub converged_at: Option<usize>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceLine<'a> {
    Step(&'a StepRecord),
    Validation(&'a ValidationRecord),
    Summary {
        initial_accuracy: f64,
        stop_step: usize,
        stop_reason: StopReason,
        best_step: usize,
        best_accuracy: f64,
        returned_step: usize,
        converged_at: Option<usize>,
    },
}

impl TrainingTrace {
    /// JSONL: one line per step, one per validation, then a summary line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut lines = Vec::new();
        for s in &self.steps {
            lines.push(canonical::to_line(&TraceLine::Step(s))?);
        }
        for v in &self.validations {
            lines.push(canonical::to_line(&TraceLine::Validation(v))?);
        }
        lines.push(canonical::to_line(&TraceLine::Summary {
            initial_accuracy: self.initial_accuracy,
            stop_step: self.stop_step,
            stop_reason: self.stop_reason,
            best_step: self.best_step,
            best_accuracy: self.best_accuracy,
            returned_step: self.returned_step,
            converged_at: self.converged_at,
        })?);
        Ok(lines.join("\n") + "\n")
    }

    pub fn max_validation_accuracy(&self) -> f64 {
        self.validations.iter().map(|v| v.accuracy).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Rank@1 evaluation of `model` on `dataset`, embedding through `features`.
pub fn evaluate_model(
    model: &ToyEmbeddingModel,
    dataset: &RetrievalDataset,
    features: &EmbeddingStore,
    scope: ValidationScope,
) -> Result<EvalReport> {
    let store = model.embed_store(features, dataset.query_ids().chain(dataset.doc_ids()))?;
    let scope = match scope {
        ValidationScope::FullCorpus => Scope::FullCorpus,
        ValidationScope::PerBatch { batch_size } => Scope::PerBatch(chunk_partition(dataset, batch_size)?),
    };
    evaluate(dataset, &store, &scope)
}

/// Baseline records whose negatives are every non-relevant corpus document,
/// grouped into the given batches.
pub fn full_negative_records(dataset: &RetrievalDataset, batches: &[Vec<QueryId>]) -> Result<Vec<BatchRecord>> {
    let mut out = Vec::with_capacity(dataset.len());
    for (batch_index, batch) in batches.iter().enumerate() {
        for q in batch {
            let relevant = dataset.relevant(q);
            let positive = dataset
                .relevant_docs
                .get(q)
                .and_then(|d| d.first())
                .ok_or_else(|| Error::UnknownId(q.clone()))?;
            out.push(BatchRecord {
                query_id: q.clone(),
                positive_id: positive.clone(),
                soft_negative_ids: dataset
                    .doc_ids()
                    .filter(|d| !relevant.contains(d.as_str()))
                    .cloned()
                    .collect(),
                hard_negative_ids: Vec::new(),
                batch_index,
            });
        }
    }
    Ok(out)
}

fn feature_record<'a>(features: &'a EmbeddingStore, r: &BatchRecord) -> Result<FeatureRecord<'a>> {
    Ok(FeatureRecord {
        query: features.get(&r.query_id)?.as_slice(),
        positive: features.get(&r.positive_id)?.as_slice(),
        negatives: r
            .negatives()
            .map(|d| features.get(d).map(|v| v.as_slice()))
            .collect::<Result<_>>()?,
    })
}

/// Mean loss and mean gradient over `records`.
///
/// Each distinct item is embedded once; per-record gradients with respect to
/// the embeddings are summed per item in record order, then pushed through
/// the linear map with one outer product per item.
fn step_gradient(
    model: &ToyEmbeddingModel,
    records: &[&BatchRecord],
    features: &EmbeddingStore,
    temperature: f64,
) -> Result<(f64, Vec<f64>)> {
    fn index_of<'a>(id: &'a str, ids: &mut Vec<&'a str>, slot: &mut HashMap<&'a str, usize>) -> usize {
        *slot.entry(id).or_insert_with(|| {
            ids.push(id);
            ids.len() - 1
        })
    }
    let mut ids: Vec<&str> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut layout = Vec::with_capacity(records.len());
    for r in records {
        let mut row = vec![
            index_of(&r.query_id, &mut ids, &mut slot),
            index_of(&r.positive_id, &mut ids, &mut slot),
        ];
        for d in r.negatives() {
            row.push(index_of(d, &mut ids, &mut slot));
        }
        layout.push(row);
    }
    let inputs: Vec<&[f64]> = ids
        .iter()
        .map(|id| features.get(id).map(|v| v.as_slice()))
        .collect::<Result<_>>()?;
    let embedded: Vec<Vec<f64>> = inputs.par_iter().map(|x| model.embed(x)).collect();

    let per_record: Vec<Result<loss::EmbeddingGradient>> = layout
        .par_iter()
        .map(|row| {
            let items: Vec<&[f64]> = row[1..].iter().map(|&i| embedded[i].as_slice()).collect();
            loss::embedding_gradient(&embedded[row[0]], &items, temperature)
        })
        .collect();

    let d_out = model.d_out();
    let mut d_embed = vec![vec![0.0; d_out]; ids.len()];
    let mut total_loss = 0.0;
    for (row, eg) in layout.iter().zip(per_record) {
        let eg = eg?;
        total_loss += eg.loss;
        for (&item, (dq, di)) in row[1..].iter().zip(&eg.terms) {
            for (acc, v) in d_embed[row[0]].iter_mut().zip(dq) {
                *acc += v;
            }
            for (acc, v) in d_embed[item].iter_mut().zip(di) {
                *acc += v;
            }
        }
    }

    let n = records.len() as f64;
    let mut grad = vec![0.0; model.weights().len()];
    for (de, x) in d_embed.iter().zip(&inputs) {
        loss::add_outer(&mut grad, de, x, 1.0 / n);
    }
    Ok((total_loss / n, grad))
}

fn windowed_improvement(steps: &[StepRecord], window: usize) -> Option<f64> {
    if steps.len() < 2 * window {
        return None;
    }
    let mean = |s: &[StepRecord]| s.iter().map(|r| r.loss).sum::<f64>() / s.len() as f64;
    let n = steps.len();
    Some(mean(&steps[n - 2 * window..n - window]) - mean(&steps[n - window..]))
}

/// Trains `model` on the micro-batches encoded in `records` (grouped by
/// `batch_index`). `features` must cover every training and validation id.
pub fn train(
    model: ToyEmbeddingModel,
    records: &[BatchRecord],
    features: &EmbeddingStore,
    validation: &RetrievalDataset,
    config: &TrainerConfig,
) -> Result<(ToyEmbeddingModel, TrainingTrace)> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::Training("empty batch plan".into()));
    }
    if validation.is_empty() {
        return Err(Error::Training("empty validation split".into()));
    }
    let train_queries: BTreeSet<&str> = records.iter().map(|r| r.query_id.as_str()).collect();
    if let Some(q) = validation.query_ids().find(|q| train_queries.contains(q.as_str())) {
        return Err(Error::Training(format!("validation query `{q}` also appears in training")));
    }
    for r in records {
        feature_record(features, r)?;
    }

    let batches = group_batches(records);
    let initial_accuracy = evaluate_model(&model, validation, features, config.validation_scope)?.accuracy;

    let mut model = model;
    let mut best_model = model.clone();
    let mut stopper = EarlyStopping::new(config.patience);
    let mut steps = Vec::new();
    let mut validations = Vec::new();
    let mut stop_reason = StopReason::MaxSteps;
    let mut converged_at = None;

    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0usize;
    let mut epoch = 0u64;

    for step in 1..=config.max_steps {
        let mut step_records: Vec<&BatchRecord> = Vec::new();
        for _ in 0..config.grad_accum_steps {
            if cursor == order.len() {
                order = (0..batches.len()).collect();
                order.shuffle(&mut seed::rng(seed::derive(config.seed, &format!("epoch-{epoch}"))));
                epoch += 1;
                cursor = 0;
            }
            step_records.extend(batches[order[cursor]].iter().copied());
            cursor += 1;
        }

        let (loss, grad) = step_gradient(&model, &step_records, features, config.temperature)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss at step {step}")));
        }
        for (w, g) in model.weights_mut().iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        steps.push(StepRecord { step, loss });

        if config.stop_rule == StopRule::Convergence {
            if let Some(gain) = windowed_improvement(&steps, config.convergence_window) {
                if gain < config.convergence_tolerance {
                    converged_at = Some(step);
                }
            }
        }
        let last = step == config.max_steps || converged_at.is_some();

        if step % config.validation_interval == 0 || last {
            let report = evaluate_model(&model, validation, features, config.validation_scope)?;
            validations.push(ValidationRecord {
                step,
                accuracy: report.accuracy,
                total_correct: report.total_correct,
                total_queries: report.total_queries,
                lowest_positive_match_rank: report.lowest_positive_match_rank,
            });
            let verdict = stopper.observe(report.accuracy);
            if verdict == Verdict::Improved {
                best_model = model.clone();
            }
            if verdict == Verdict::Stop && config.stop_rule == StopRule::EarlyStopping {
                stop_reason = StopReason::Patience;
                break;
            }
        }
        if converged_at.is_some() {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    let best = &validations[stopper.best_index()];
    let stop_step = steps.last().map_or(0, |s| s.step);
    let (returned, returned_step) = match config.stop_rule {
        StopRule::EarlyStopping => (best_model, best.step),
        StopRule::Convergence => (model, stop_step),
    };
    let trace = TrainingTrace {
        initial_accuracy,
        stop_step,
        stop_reason,
        best_step: best.step,
        best_accuracy: best.accuracy,
        returned_step,
        converged_at,
        steps,
        validations,
    };
    Ok((returned, trace))
}
