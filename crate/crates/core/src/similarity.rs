//! Cosine similarity, exhaustive document ranking and rank@1 evaluation.
//!
//! Ranks are 0-indexed: rank 0 means the relevant document scored highest.
//! Equal scores are ordered by ascending document id so rankings are total
//! and reproducible.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RetrievalDataset;
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::{DocId, QueryId};

/// `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm(String::from(if na == 0.0 { "lhs" } else { "rhs" })));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub id: DocId,
    pub score: f64,
}

/// Documents in descending score order, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<ScoredDoc>,
}

fn ranking_order(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

impl RankedList {
    /// Sorts arbitrary scored documents into ranking order.
    pub fn from_scores(mut entries: Vec<ScoredDoc>) -> Self {
        entries.sort_by(ranking_order);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    /// The sub-list of entries not in `exclude`, order preserved.
    pub fn without(&self, exclude: &BTreeSet<&str>) -> RankedList {
        RankedList {
            entries: self
                .entries
                .iter()
                .filter(|e| !exclude.contains(e.id.as_str()))
                .cloned()
                .collect(),
        }
    }
}

/// Ranks a query vector against candidates drawn from `store`.
pub fn rank_vector<'a, I>(query: &[f64], candidates: I, store: &EmbeddingStore) -> Result<RankedList>
where
    I: IntoIterator<Item = &'a str>,
{
    let unique: BTreeSet<&str> = candidates.into_iter().collect();
    let mut entries = Vec::with_capacity(unique.len());
    for id in unique {
        let doc = store.get(id)?;
        entries.push(ScoredDoc {
            id: id.to_string(),
            score: cosine_similarity(query, doc.as_slice())?,
        });
    }
    Ok(RankedList::from_scores(entries))
}

pub fn rank_documents<'a, I>(query: &str, candidates: I, store: &EmbeddingStore) -> Result<RankedList>
where
    I: IntoIterator<Item = &'a str>,
{
    rank_vector(store.get(query)?.as_slice(), candidates, store)
}

/// Smallest index whose document is relevant.
pub fn positive_rank(ranked: &RankedList, relevant: &BTreeSet<&str>) -> Result<usize> {
    ranked
        .entries
        .iter()
        .position(|e| relevant.contains(e.id.as_str()))
        .ok_or(Error::NoRelevantCandidate)
}

/// Candidate pool used when evaluating each query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    /// Every query is ranked against the whole corpus.
    FullCorpus,
    /// Queries are partitioned into batches; a query is ranked against the
    /// relevant documents of every query in its batch.
    PerBatch(Vec<Vec<QueryId>>),
}

/// Splits the dataset's queries, in id order, into consecutive chunks of
/// `batch_size`. Chunks for a size that divides another nest inside them.
pub fn chunk_partition(dataset: &RetrievalDataset, batch_size: usize) -> Result<Vec<Vec<QueryId>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let ids: Vec<QueryId> = dataset.query_ids().cloned().collect();
    Ok(ids.chunks(batch_size).map(<[QueryId]>::to_vec).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total_correct: usize,
    pub total_queries: usize,
    pub accuracy: f64,
    /// Worst (largest) 0-indexed positive rank over all queries.
    pub lowest_positive_match_rank: usize,
    pub positive_ranks: BTreeMap<QueryId, usize>,
}

impl EvalReport {
    pub fn from_ranks(positive_ranks: BTreeMap<QueryId, usize>) -> Self {
        let total_queries = positive_ranks.len();
        let total_correct = positive_ranks.values().filter(|&&r| r == 0).count();
        let accuracy = if total_queries == 0 {
            0.0
        } else {
            total_correct as f64 / total_queries as f64
        };
        Self {
            total_correct,
            total_queries,
            accuracy,
            lowest_positive_match_rank: positive_ranks.values().copied().max().unwrap_or(0),
            positive_ranks,
        }
    }

    pub fn accuracy_4dp(&self) -> String {
        format_accuracy(self.total_correct, self.total_queries)
    }

    /// Table with the columns Batch Size, Total Correct, Total Queries,
    /// Final Accuracy, Lowest Positive Match Rank.
    pub fn table(rows: &[(String, &EvalReport)]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>10} | {:>13} | {:>13} | {:>14} | {:>26}",
            "Batch Size", "Total Correct", "Total Queries", "Final Accuracy", "Lowest Positive Match Rank"
        );
        for (label, r) in rows {
            let _ = writeln!(
                out,
                "{:>10} | {:>13} | {:>13} | {:>14} | {:>26}",
                label,
                r.total_correct,
                r.total_queries,
                r.accuracy_4dp(),
                r.lowest_positive_match_rank
            );
        }
        let _ = writeln!(out, "(ranks are 0-indexed; rank 0 is a rank@1 hit)");
        out
    }
}

pub fn format_accuracy(correct: usize, total: usize) -> String {
    if total == 0 {
        return "n/a".into();
    }
    format!("{:.4}", correct as f64 / total as f64)
}

pub fn evaluate(dataset: &RetrievalDataset, store: &EmbeddingStore, scope: &Scope) -> Result<EvalReport> {
    let jobs: Vec<(&QueryId, Vec<&str>)> = match scope {
        Scope::FullCorpus => {
            let all: Vec<&str> = dataset.doc_ids().map(String::as_str).collect();
            dataset.query_ids().map(|q| (q, all.clone())).collect()
        }
        Scope::PerBatch(batches) => {
            let mut seen = BTreeSet::new();
            let mut jobs = Vec::with_capacity(dataset.len());
            for batch in batches {
                let pool: BTreeSet<&str> = batch
                    .iter()
                    .flat_map(|q| dataset.relevant_docs.get(q).into_iter().flatten())
                    .map(String::as_str)
                    .collect();
                let pool: Vec<&str> = pool.into_iter().collect();
                for q in batch {
                    let (q, _) = dataset
                        .queries
                        .get_key_value(q)
                        .ok_or_else(|| Error::UnknownId(q.clone()))?;
                    if !seen.insert(q.as_str()) {
                        return Err(Error::Config(format!("query `{q}` appears in more than one batch")));
                    }
                    jobs.push((q, pool.clone()));
                }
            }
            if seen.len() != dataset.len() {
                return Err(Error::Config("batch partition does not cover every query".into()));
            }
            jobs
        }
    };

    let ranks: Vec<Result<(QueryId, usize)>> = jobs
        .par_iter()
        .map(|(q, pool)| {
            let ranked = rank_documents(q, pool.iter().copied(), store)?;
            let rank = positive_rank(&ranked, &dataset.relevant(q))?;
            Ok(((*q).clone(), rank))
        })
        .collect();
    let ranks = ranks.into_iter().collect::<Result<BTreeMap<_, _>>>()?;
    Ok(EvalReport::from_ranks(ranks))
}
