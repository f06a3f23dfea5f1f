use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::seed;

/// Linear embedding map `x ↦ W·x` with `W` of shape `d_out × d_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyEmbeddingModel {
    d_in: usize,
    d_out: usize,
    /// Row-major, `d_out * d_in` entries.
    weights: Vec<f64>,
}

impl ToyEmbeddingModel {
    pub fn from_weights(d_out: usize, d_in: usize, weights: Vec<f64>) -> Result<Self> {
        if d_out < 2 || d_in == 0 {
            return Err(Error::Config(format!("invalid model shape {d_out}x{d_in}")));
        }
        if weights.len() != d_out * d_in {
            return Err(Error::LengthMismatch(weights.len(), d_out * d_in));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("non-finite model weight".into()));
        }
        Ok(Self { d_in, d_out, weights })
    }

    /// Uniform initialisation in `±sqrt(3 / d_in)` (unit variance per output).
    pub fn random(d_out: usize, d_in: usize, seed: u64) -> Result<Self> {
        let bound = (3.0 / d_in.max(1) as f64).sqrt();
        let mut rng = seed::rng(seed);
        let weights = (0..d_out * d_in).map(|_| rng.gen_range(-bound..bound)).collect();
        Self::from_weights(d_out, d_in, weights)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.d_in);
        self.weights
            .chunks_exact(self.d_in)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// Embeds every listed id of `features` into a new store.
    pub fn embed_store<'a, I>(&self, features: &EmbeddingStore, ids: I) -> Result<EmbeddingStore>
    where
        I: IntoIterator<Item = &'a String>,
    {
        if features.dim() != self.d_in {
            return Err(Error::LengthMismatch(features.dim(), self.d_in));
        }
        let mut records = Vec::new();
        for id in ids {
            records.push((id.clone(), self.embed(features.get(id)?.as_slice())));
        }
        EmbeddingStore::from_records(records)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        canonical::write(path, self)
    }
}
