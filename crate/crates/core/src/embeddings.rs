//! Immutable identifier → embedding store.
//!
//! File format is JSON Lines, one record per line:
//! `{"id": "<string>", "vector": [<numbers>]}`. Blank lines are ignored.
//! Query and document identifiers share the file, so they must be distinct.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canonical;
use crate::error::{Error, Result};

/// A finite vector with non-zero Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        Self::checked(components, "<anonymous>", 0)
    }

    fn checked(components: Vec<f64>, id: &str, record: usize) -> Result<Self> {
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                record,
                id: id.to_string(),
                index,
            });
        }
        if components.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroNorm(id.to_string()));
        }
        Ok(Self(components))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, EmbeddingVector>,
}

impl EmbeddingStore {
    /// Builds a store from `(id, components)` pairs; record numbers in errors
    /// are 1-based positions in `records`.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut dim = None;
        let mut vectors = BTreeMap::new();
        for (i, (id, components)) in records.into_iter().enumerate() {
            Self::insert(&mut dim, &mut vectors, i + 1, id, components)?;
        }
        let dim = dim.ok_or(Error::EmptyEmbeddings)?;
        Ok(Self { dim, vectors })
    }

    fn insert(
        dim: &mut Option<usize>,
        vectors: &mut BTreeMap<String, EmbeddingVector>,
        record: usize,
        id: String,
        components: Vec<f64>,
    ) -> Result<()> {
        if id.is_empty() {
            return Err(Error::EmptyIdentifier("embeddings"));
        }
        let expected = *dim.get_or_insert(components.len());
        if components.len() != expected || expected == 0 {
            return Err(Error::DimensionMismatch {
                record,
                id,
                expected,
                found: components.len(),
            });
        }
        let vector = EmbeddingVector::checked(components, &id, record)?;
        match vectors.entry(id) {
            Entry::Occupied(e) => Err(Error::DuplicateId(e.key().clone())),
            Entry::Vacant(e) => {
                e.insert(vector);
                Ok(())
            }
        }
    }

    /// Parses JSONL text; record numbers in errors are 1-based line numbers.
    pub fn from_jsonl_str(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut vectors = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record =
                serde_json::from_str(line).map_err(|e| Error::parse(format!("embeddings line {}", i + 1), e))?;
            Self::insert(&mut dim, &mut vectors, i + 1, record.id, record.vector)?;
        }
        let dim = dim.ok_or(Error::EmptyEmbeddings)?;
        Ok(Self { dim, vectors })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl_str(&canonical::read_to_string(path)?)
    }

    pub fn to_jsonl_string(&self) -> Result<String> {
        let mut out = String::new();
        for (id, v) in &self.vectors {
            out.push_str(&canonical::to_line(&Record {
                id: id.clone(),
                vector: v.0.clone(),
            })?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, id: &str) -> Result<&EmbeddingVector> {
        self.vectors.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.vectors.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &EmbeddingVector)> {
        self.vectors.iter()
    }

    /// SHA-256 over ids and the little-endian bits of every component, in
    /// id order. Identical for identical contents regardless of file layout.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.dim as u64).to_le_bytes());
        for (id, v) in &self.vectors {
            hasher.update((id.len() as u64).to_le_bytes());
            hasher.update(id.as_bytes());
            for c in &v.0 {
                hasher.update(c.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}
