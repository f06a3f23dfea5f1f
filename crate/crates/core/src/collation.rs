//! Model-aware collation map.
//!
//! For each query the base model's embeddings rank the full corpus. The
//! relevant documents become `positives`; the `k_soft` highest-scoring
//! non-relevant documents become soft negatives; `k_hard` hard negatives are
//! drawn uniformly (seeded, without replacement) from the lower half of the
//! remaining non-relevant documents. When that half holds fewer than `k_hard`
//! documents the draw covers the whole remainder.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::dataset::RetrievalDataset;
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::seed;
use crate::similarity::{positive_rank, rank_documents, RankedList};
use crate::{DocId, QueryId};

pub const DEFAULT_K_SOFT: usize = 5;
pub const DEFAULT_K_HARD: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollationEntry {
    /// Relevant documents, best-ranked first.
    pub positives: Vec<DocId>,
    pub soft_negatives: Vec<DocId>,
    pub hard_negatives: Vec<DocId>,
    /// Cosine similarity between the query and its best-ranked positive.
    pub positive_match_similarity: f64,
    /// 0-indexed rank of the best positive over the full corpus.
    pub positive_rank: usize,
}

impl CollationEntry {
    pub fn best_positive(&self) -> &str {
        &self.positives[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub embeddings_digest: String,
    pub k_soft: usize,
    pub k_hard: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollationMap {
    pub entries: BTreeMap<QueryId, CollationEntry>,
    pub provenance: Provenance,
}

impl CollationMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = canonical::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let map: Self = serde_json::from_str(text).map_err(|e| Error::parse("collation map", e))?;
        if let Some((q, _)) = map.entries.iter().find(|(_, e)| e.positives.is_empty()) {
            return Err(Error::NoRelevantDocuments(q.clone()));
        }
        Ok(map)
    }

    pub fn to_json_string(&self) -> Result<String> {
        canonical::to_string(self)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        canonical::write(path, self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of queries whose best positive ranks first.
    pub fn n_positives(&self) -> usize {
        self.entries.values().filter(|e| e.positive_rank == 0).count()
    }
}

/// Rank positions (within the list left after removing the soft negatives)
/// eligible for hard-negative sampling.
pub fn hard_window(remaining: usize, k_hard: usize) -> Range<usize> {
    let lower_half = remaining.div_ceil(2);
    if lower_half >= k_hard {
        remaining - lower_half..remaining
    } else {
        0..remaining
    }
}

/// Splits a ranked list of non-relevant documents into soft and hard
/// negatives. Hard negatives are returned in rank order.
pub fn classify_negatives(
    ranked_non_relevant: &RankedList,
    k_soft: usize,
    k_hard: usize,
    seed: u64,
) -> Result<(Vec<DocId>, Vec<DocId>)> {
    let n = ranked_non_relevant.len();
    if n < k_soft + k_hard {
        return Err(Error::InsufficientCandidates {
            needed: k_soft + k_hard,
            available: n,
        });
    }
    let ids: Vec<&str> = ranked_non_relevant.ids().collect();
    let soft = ids[..k_soft].iter().map(|s| s.to_string()).collect();

    let remainder = &ids[k_soft..];
    let window = hard_window(remainder.len(), k_hard);
    let mut rng = seed::rng(seed);
    let mut picks: Vec<usize> = index::sample(&mut rng, window.len(), k_hard).into_vec();
    picks.sort_unstable();
    let hard = picks
        .into_iter()
        .map(|i| remainder[window.start + i].to_string())
        .collect();
    Ok((soft, hard))
}

pub fn build_collation_map(
    dataset: &RetrievalDataset,
    store: &EmbeddingStore,
    k_soft: usize,
    k_hard: usize,
    seed: u64,
) -> Result<CollationMap> {
    for id in dataset.query_ids().chain(dataset.doc_ids()) {
        store.get(id)?;
    }
    let needed = k_soft + k_hard;
    let corpus_size = dataset.corpus.len();
    let starved: Vec<QueryId> = dataset
        .query_ids()
        .filter(|q| corpus_size - dataset.relevant(q).len() < needed)
        .cloned()
        .collect();
    if !starved.is_empty() {
        return Err(Error::UnderResourcedQueries { needed, queries: starved });
    }

    let all_docs: Vec<&str> = dataset.doc_ids().map(String::as_str).collect();
    let queries: Vec<&QueryId> = dataset.query_ids().collect();
    let entries: Vec<Result<(QueryId, CollationEntry)>> = queries
        .par_iter()
        .map(|q| {
            let relevant = dataset.relevant(q);
            let ranked = rank_documents(q, all_docs.iter().copied(), store)?;
            let entry = collate_query(&ranked, &relevant, k_soft, k_hard, seed::derive(seed, q))?;
            Ok(((*q).clone(), entry))
        })
        .collect();

    Ok(CollationMap {
        entries: entries.into_iter().collect::<Result<_>>()?,
        provenance: Provenance {
            embeddings_digest: store.digest(),
            k_soft,
            k_hard,
            seed,
        },
    })
}

fn collate_query(
    ranked: &RankedList,
    relevant: &BTreeSet<&str>,
    k_soft: usize,
    k_hard: usize,
    query_seed: u64,
) -> Result<CollationEntry> {
    let rank = positive_rank(ranked, relevant)?;
    let positives = ranked
        .entries
        .iter()
        .filter(|e| relevant.contains(e.id.as_str()))
        .map(|e| e.id.clone())
        .collect();
    let (soft_negatives, hard_negatives) = classify_negatives(&ranked.without(relevant), k_soft, k_hard, query_seed)?;
    Ok(CollationEntry {
        positives,
        soft_negatives,
        hard_negatives,
        positive_match_similarity: ranked.entries[rank].score,
        positive_rank: rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::ScoredDoc;

    fn ranked(n: usize) -> RankedList {
        RankedList {
            entries: (0..n)
                .map(|i| ScoredDoc {
                    id: format!("n{i:02}"),
                    score: 1.0 - i as f64 / 100.0,
                })
                .collect(),
        }
    }

    fn position(id: &str) -> usize {
        id[1..].parse().unwrap()
    }

    #[test]
    fn twelve_candidates_widen_window() {
        // 7 remain after the soft picks; their lower half (positions 8..12)
        // holds only 4, so the draw covers positions 5..12.
        assert_eq!(hard_window(7, 5), 0..7);
        let (soft, hard) = classify_negatives(&ranked(12), 5, 5, 3).unwrap();
        assert_eq!(soft, vec!["n00", "n01", "n02", "n03", "n04"]);
        assert_eq!(hard.len(), 5);
        assert!(hard.iter().all(|h| (5..12).contains(&position(h))));
        let distinct: BTreeSet<_> = hard.iter().collect();
        assert_eq!(distinct.len(), 5);
    }

    #[test]
    fn lower_half_used_when_large_enough() {
        // 30 candidates: 25 remain, lower half is the last 13.
        assert_eq!(hard_window(25, 5), 12..25);
        for seed in 0..20 {
            let (_, hard) = classify_negatives(&ranked(30), 5, 5, seed).unwrap();
            assert!(hard.iter().all(|h| position(h) >= 17), "{hard:?}");
        }
    }

    #[test]
    fn degenerate_counts() {
        let (soft, hard) = classify_negatives(&ranked(4), 0, 0, 1).unwrap();
        assert!(soft.is_empty() && hard.is_empty());
        let (soft, hard) = classify_negatives(&ranked(10), 5, 5, 1).unwrap();
        assert_eq!(soft.len(), 5);
        assert_eq!(hard, vec!["n05", "n06", "n07", "n08", "n09"]);
        assert!(matches!(
            classify_negatives(&ranked(9), 5, 5, 1),
            Err(Error::InsufficientCandidates { needed: 10, available: 9 })
        ));
    }

    #[test]
    fn sampling_is_seeded() {
        let a = classify_negatives(&ranked(40), 5, 5, 11).unwrap();
        let b = classify_negatives(&ranked(40), 5, 5, 11).unwrap();
        assert_eq!(a, b);
        let differs = (0..10).any(|s| classify_negatives(&ranked(40), 5, 5, s).unwrap().1 != a.1);
        assert!(differs);
    }

    #[test]
    fn entry_serializes_in_documented_shape() {
        let entry = CollationEntry {
            positives: vec!["bZjhOCwdCNixvw".into()],
            soft_negatives: vec!["SDBU_xkhIwcz3w".into()],
            hard_negatives: vec!["zdGv_8yIIKRSaA".into()],
            positive_match_similarity: 0.93701171875,
            positive_rank: 0,
        };
        let line = canonical::to_line(&entry).unwrap();
        assert_eq!(
            line,
            r#"{"hard_negatives":["zdGv_8yIIKRSaA"],"positive_match_similarity":0.93701171875,"positive_rank":0,"positives":["bZjhOCwdCNixvw"],"soft_negatives":["SDBU_xkhIwcz3w"]}"#
        );
    }
}
