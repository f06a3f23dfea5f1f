//! Synthetic clustered retrieval data for exercising the training pipeline.
//!
//! Each query/document pair shares a latent point drawn around one of
//! `n_clusters` centers. The latent point occupies the first `signal_dims`
//! input features of both sides; the remaining features are independent
//! nuisance noise, so a random projection retrieves poorly while a learned
//! projection that suppresses the nuisance features retrieves well.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::RetrievalDataset;
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteredConfig {
    pub d_in: usize,
    pub n_clusters: usize,
    pub signal_dims: usize,
    /// Spread of a pair's latent point around its cluster center.
    pub item_spread: f64,
    /// Per-vector noise added to the signal features.
    pub signal_noise: f64,
    /// Scale of the nuisance features.
    pub nuisance_scale: f64,
    pub seed: u64,
}

impl Default for ClusteredConfig {
    fn default() -> Self {
        Self {
            d_in: 32,
            n_clusters: 8,
            signal_dims: 8,
            item_spread: 1.5,
            signal_noise: 0.1,
            nuisance_scale: 1.0,
            seed: seed::DEFAULT_SEED,
        }
    }
}

/// A dataset together with the input features of its queries and documents.
#[derive(Debug, Clone)]
pub struct SyntheticSplit {
    pub dataset: RetrievalDataset,
    pub features: Vec<(String, Vec<f64>)>,
    /// Cluster index of every query and document.
    pub clusters: BTreeMap<String, usize>,
}

fn gaussian(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn centers(config: &ClusteredConfig) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed::derive(config.seed, "centers"));
    (0..config.n_clusters)
        .map(|_| gaussian(&mut rng, config.signal_dims, 1.0))
        .collect()
}

/// Generates `n_pairs` one-to-one query/document pairs. Ids are prefixed by
/// `name`, and different names give disjoint splits over the same centers.
pub fn clustered_split(config: &ClusteredConfig, name: &str, n_pairs: usize) -> Result<SyntheticSplit> {
    if config.signal_dims == 0 || config.signal_dims > config.d_in || config.n_clusters == 0 {
        return Err(Error::Config("invalid synthetic configuration".into()));
    }
    let centers = centers(config);
    let mut rng = seed::rng(seed::derive(config.seed, name));
    let nuisance = config.d_in - config.signal_dims;

    let mut queries = BTreeMap::new();
    let mut corpus = BTreeMap::new();
    let mut relevant = BTreeMap::new();
    let mut features = Vec::with_capacity(2 * n_pairs);
    let mut clusters = BTreeMap::new();

    for i in 0..n_pairs {
        let cluster = rng.gen_range(0..config.n_clusters);
        let offset = gaussian(&mut rng, config.signal_dims, config.item_spread);
        let latent: Vec<f64> = centers[cluster].iter().zip(&offset).map(|(c, o)| c + o).collect();
        let q = format!("{name}-q{i:04}");
        let d = format!("{name}-d{i:04}");
        for id in [&q, &d] {
            let mut x: Vec<f64> = latent
                .iter()
                .zip(gaussian(&mut rng, config.signal_dims, config.signal_noise))
                .map(|(l, n)| l + n)
                .collect();
            x.extend(gaussian(&mut rng, nuisance, config.nuisance_scale));
            features.push((id.clone(), x));
            clusters.insert(id.clone(), cluster);
        }
        queries.insert(q.clone(), format!("synthetic query {i} (cluster {cluster})"));
        corpus.insert(d.clone(), format!("synthetic document {i} (cluster {cluster})"));
        relevant.insert(q, vec![d]);
    }

    Ok(SyntheticSplit {
        dataset: RetrievalDataset::new(queries, corpus, relevant)?,
        features,
        clusters,
    })
}

/// Feature store covering every split.
pub fn feature_store(splits: &[&SyntheticSplit]) -> Result<EmbeddingStore> {
    EmbeddingStore::from_records(splits.iter().flat_map(|s| s.features.iter().cloned()))
}

/// Random embeddings for `n_queries` queries, each with one relevant
/// document, plus `extra_docs` unrelated documents. Useful for property tests.
pub fn random_instance(
    n_queries: usize,
    extra_docs: usize,
    dim: usize,
    seed_value: u64,
) -> Result<(RetrievalDataset, EmbeddingStore)> {
    let mut rng = seed::rng(seed_value);
    let mut queries = BTreeMap::new();
    let mut corpus = BTreeMap::new();
    let mut relevant = BTreeMap::new();
    let mut vectors = Vec::new();
    let vector = |rng: &mut rand_chacha::ChaCha8Rng| loop {
        let v = gaussian(rng, dim, 1.0);
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    };
    for i in 0..n_queries {
        let q = format!("q{i:03}");
        let d = format!("d{i:03}");
        vectors.push((q.clone(), vector(&mut rng)));
        vectors.push((d.clone(), vector(&mut rng)));
        queries.insert(q.clone(), String::new());
        corpus.insert(d.clone(), String::new());
        relevant.insert(q, vec![d]);
    }
    for j in 0..extra_docs {
        let d = format!("x{j:03}");
        vectors.push((d.clone(), vector(&mut rng)));
        corpus.insert(d, String::new());
    }
    Ok((
        RetrievalDataset::new(queries, corpus, relevant)?,
        EmbeddingStore::from_records(vectors)?,
    ))
}
