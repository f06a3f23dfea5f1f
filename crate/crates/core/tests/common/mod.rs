//! Brute-force reference implementations used to cross-check the pipeline.
//! Nothing here calls the ranking, collation or planning code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use collatekit::trainer::{record_loss, FeatureRecord, ToyEmbeddingModel};
use collatekit::{EmbeddingStore, RetrievalDataset};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// `a` outranks `b` when its score is higher, or equal with a smaller id.
fn outranks(a: &(String, f64), b: &(String, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Full ranking by repeated selection of the best remaining candidate.
pub fn oracle_rank(query: &[f64], docs: &[(String, Vec<f64>)]) -> Vec<(String, f64)> {
    let mut pool: Vec<(String, f64)> = docs
        .iter()
        .map(|(id, v)| (id.clone(), oracle_cosine(query, v)))
        .collect();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            if outranks(&pool[i], &pool[best]) {
                best = i;
            }
        }
        out.push(pool.swap_remove(best));
    }
    out
}

/// Number of candidates that outrank the best relevant document.
pub fn oracle_positive_rank(query: &[f64], docs: &[(String, Vec<f64>)], relevant: &BTreeSet<String>) -> usize {
    let scored: Vec<(String, f64)> = docs
        .iter()
        .map(|(id, v)| (id.clone(), oracle_cosine(query, v)))
        .collect();
    let best = scored
        .iter()
        .filter(|d| relevant.contains(&d.0))
        .fold(None::<&(String, f64)>, |acc, d| match acc {
            Some(b) if !outranks(d, b) => Some(b),
            _ => Some(d),
        })
        .expect("a relevant document");
    scored.iter().filter(|d| outranks(d, best)).count()
}

pub fn docs_of(dataset: &RetrievalDataset, store: &EmbeddingStore) -> Vec<(String, Vec<f64>)> {
    dataset
        .doc_ids()
        .map(|d| (d.clone(), store.get(d).unwrap().as_slice().to_vec()))
        .collect()
}

pub fn relevant_set(dataset: &RetrievalDataset, q: &str) -> BTreeSet<String> {
    dataset.relevant_docs[q].iter().cloned().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub positives: Vec<String>,
    pub soft: Vec<String>,
    pub hard: Vec<String>,
    pub similarity: f64,
    pub rank: usize,
}

/// Seed for one query's hard-negative draw: the first eight bytes of
/// SHA-256(seed_le || query_id), read little endian.
pub fn oracle_query_seed(seed: u64, query: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(query.as_bytes());
    let d = Sha256::digest(&bytes);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

pub fn oracle_collation(
    dataset: &RetrievalDataset,
    store: &EmbeddingStore,
    k_soft: usize,
    k_hard: usize,
    seed: u64,
) -> BTreeMap<String, OracleEntry> {
    let docs = docs_of(dataset, store);
    let mut out = BTreeMap::new();
    for q in dataset.query_ids() {
        let qv = store.get(q).unwrap().as_slice();
        let relevant = relevant_set(dataset, q);
        let ranked = oracle_rank(qv, &docs);
        let rank = oracle_positive_rank(qv, &docs, &relevant);
        let positives: Vec<String> = ranked.iter().filter(|d| relevant.contains(&d.0)).map(|d| d.0.clone()).collect();
        let negatives: Vec<String> = ranked.iter().filter(|d| !relevant.contains(&d.0)).map(|d| d.0.clone()).collect();
        let soft = negatives[..k_soft].to_vec();
        let rest = &negatives[k_soft..];
        // lower half (rounded up) of the remainder, or all of it if too small
        let half = rest.len().div_ceil(2);
        let start = if half >= k_hard { rest.len() - half } else { 0 };
        let window = &rest[start..];
        let mut rng = ChaCha8Rng::seed_from_u64(oracle_query_seed(seed, q));
        let mut picks = index::sample(&mut rng, window.len(), k_hard).into_vec();
        picks.sort();
        let hard = picks.into_iter().map(|i| window[i].clone()).collect();
        out.insert(
            q.clone(),
            OracleEntry {
                similarity: ranked[rank].1,
                positives,
                soft,
                hard,
                rank,
            },
        );
    }
    out
}

/// Smallest b in 1..=n_queries with n_queries / b ≥ 1 and
/// n_positives / ⌈n_queries / b⌉ ≥ 1, by linear scan.
pub fn oracle_b_min(n_queries: usize, n_positives: usize) -> Option<usize> {
    (1..=n_queries).find(|&b| {
        let batches = n_queries.div_ceil(b);
        n_queries as f64 / b as f64 >= 1.0 && n_positives as f64 / batches as f64 >= 1.0
    })
}

const FD_STEP: f64 = 1e-5;

/// Central-difference gradient of the record loss with respect to every weight.
pub fn numerical_gradient(model: &ToyEmbeddingModel, record: &FeatureRecord, tau: f64) -> Vec<f64> {
    let w = model.weights().to_vec();
    let loss_at = |weights: Vec<f64>| {
        let m = ToyEmbeddingModel::from_weights(model.d_out(), model.d_in(), weights).unwrap();
        record_loss(&m, record, tau).unwrap()
    };
    (0..w.len())
        .map(|i| {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += FD_STEP;
            minus[i] -= FD_STEP;
            (loss_at(plus) - loss_at(minus)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Largest componentwise error, relative to the larger of the two magnitudes
/// floored at the largest numeric component (so near-zero entries do not blow up).
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-8);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / scale.max(a.abs().max(n.abs())))
        .fold(0.0, f64::max)
}
