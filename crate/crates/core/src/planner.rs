//! Smallest effective batch size and balanced batch planning.
//!
//! `b_min` is the smallest batch size `b ≤ n_queries` for which the
//! `⌈n_queries / b⌉` batches can each hold at least one query whose positive
//! ranked first, which reduces to `⌈n_queries / n_positives⌉`. Plans sort
//! queries by positive rank (ties by id) and deal them round-robin, so rank-0
//! queries and each difficulty stratum spread evenly over the batches.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::collation::CollationMap;
use crate::dataset::RetrievalDataset;
use crate::error::{Error, Result};
use crate::{DocId, QueryId};

pub fn min_effective_batch_size(n_queries: usize, n_positives: usize) -> Result<usize> {
    if n_queries == 0 {
        return Err(Error::NoQueries);
    }
    if n_positives == 0 {
        return Err(Error::NoPositives);
    }
    if n_positives > n_queries {
        return Err(Error::Config(format!(
            "{n_positives} positives exceed {n_queries} queries"
        )));
    }
    Ok(n_queries.div_ceil(n_positives))
}

pub fn num_batches(n_queries: usize, batch_size: usize) -> usize {
    n_queries.div_ceil(batch_size)
}

pub fn positives_per_batch(n_positives: usize, num_batches: usize) -> usize {
    assert!(num_batches >= 1, "num_batches must be at least 1");
    (n_positives / num_batches).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub b_min: usize,
    pub batch_size: usize,
    pub num_batches: usize,
    pub pos_per_batch: usize,
    pub batches: Vec<Vec<QueryId>>,
    pub per_batch_positive_pct: Vec<f64>,
}

impl BatchPlan {
    pub fn save(&self, path: &Path) -> Result<()> {
        canonical::write(path, self)
    }
}

pub fn plan_batches(map: &CollationMap, batch_size: usize) -> Result<BatchPlan> {
    let n_queries = map.len();
    let b_min = min_effective_batch_size(n_queries, map.n_positives())?;
    if batch_size < b_min {
        return Err(Error::BatchBelowMinimum {
            requested: batch_size,
            b_min,
        });
    }
    if batch_size > n_queries {
        return Err(Error::BatchTooLarge {
            requested: batch_size,
            n_queries,
        });
    }

    let mut order: Vec<(&QueryId, usize)> = map.entries.iter().map(|(q, e)| (q, e.positive_rank)).collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let count = num_batches(n_queries, batch_size);
    let mut batches = vec![Vec::new(); count];
    for (i, (q, _)) in order.into_iter().enumerate() {
        batches[i % count].push(q.clone());
    }

    let mut plan = BatchPlan {
        b_min,
        batch_size,
        num_batches: count,
        pos_per_batch: positives_per_batch(map.n_positives(), count),
        batches,
        per_batch_positive_pct: Vec::new(),
    };
    plan.per_batch_positive_pct = batch_positive_percentage(&plan, map)?;
    Ok(plan)
}

pub fn batch_positive_percentage(plan: &BatchPlan, map: &CollationMap) -> Result<Vec<f64>> {
    plan.batches
        .iter()
        .map(|batch| {
            let mut hits = 0usize;
            for q in batch {
                let entry = map.entries.get(q).ok_or_else(|| Error::MissingEntry(q.clone()))?;
                if entry.positive_rank == 0 {
                    hits += 1;
                }
            }
            Ok(100.0 * hits as f64 / batch.len() as f64)
        })
        .collect()
}

/// One training example: a query, its best-ranked positive and its negatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub query_id: QueryId,
    pub positive_id: DocId,
    pub soft_negative_ids: Vec<DocId>,
    pub hard_negative_ids: Vec<DocId>,
    pub batch_index: usize,
}

impl BatchRecord {
    /// Soft negatives followed by hard negatives.
    pub fn negatives(&self) -> impl Iterator<Item = &DocId> {
        self.soft_negative_ids.iter().chain(&self.hard_negative_ids)
    }
}

/// Produces one record per planned query, batch by batch. When a dataset is
/// given every referenced id is checked against it.
pub fn emit_training_batches(
    plan: &BatchPlan,
    map: &CollationMap,
    dataset: Option<&RetrievalDataset>,
) -> Result<Vec<BatchRecord>> {
    let mut records = Vec::with_capacity(map.len());
    for (batch_index, batch) in plan.batches.iter().enumerate() {
        for q in batch {
            let entry = map.entries.get(q).ok_or_else(|| Error::MissingEntry(q.clone()))?;
            let record = BatchRecord {
                query_id: q.clone(),
                positive_id: entry.best_positive().to_string(),
                soft_negative_ids: entry.soft_negatives.clone(),
                hard_negative_ids: entry.hard_negatives.clone(),
                batch_index,
            };
            if let Some(ds) = dataset {
                if !ds.queries.contains_key(q) {
                    return Err(Error::UnknownId(q.clone()));
                }
                let docs = std::iter::once(&record.positive_id).chain(record.negatives());
                for d in docs {
                    if !ds.corpus.contains_key(d) {
                        return Err(Error::UnknownId(d.clone()));
                    }
                }
            }
            records.push(record);
        }
    }
    Ok(records)
}

pub fn write_batch_file(path: &Path, records: &[BatchRecord]) -> Result<()> {
    canonical::write_lines(path, records)
}

pub fn parse_batch_file(text: &str) -> Result<Vec<BatchRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(format!("batch file line {}", i + 1), e)))
        .collect()
}

pub fn load_batch_file(path: &Path) -> Result<Vec<BatchRecord>> {
    parse_batch_file(&canonical::read_to_string(path)?)
}

/// Groups records by `batch_index`, preserving record order within a batch.
pub fn group_batches(records: &[BatchRecord]) -> Vec<Vec<&BatchRecord>> {
    let mut grouped: BTreeMap<usize, Vec<&BatchRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.batch_index).or_default().push(r);
    }
    grouped.into_values().collect()
}
