//! Retrieval datasets: queries, corpus and query → relevant document mappings.
//!
//! The on-disk form is a single JSON object:
//!
//! ```json
//! { "queries": { "q1": "text" },
//!   "corpus": { "d1": "text" },
//!   "relevant_docs": { "q1": ["d1"] } }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::{Error, Result};
use crate::{DocId, QueryId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalDataset {
    pub queries: BTreeMap<QueryId, String>,
    pub corpus: BTreeMap<DocId, String>,
    pub relevant_docs: BTreeMap<QueryId, Vec<DocId>>,
}

impl RetrievalDataset {
    /// Builds a dataset and checks every referential invariant.
    pub fn new(
        queries: BTreeMap<QueryId, String>,
        corpus: BTreeMap<DocId, String>,
        relevant_docs: BTreeMap<QueryId, Vec<DocId>>,
    ) -> Result<Self> {
        let dataset = Self {
            queries,
            corpus,
            relevant_docs,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let dataset: Self = serde_json::from_str(text).map_err(|e| Error::parse("dataset", e))?;
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = canonical::read_to_string(path)?;
        let dataset: Self =
            serde_json::from_str(&text).map_err(|e| Error::parse(format!("dataset {}", path.display()), e))?;
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn to_json_string(&self) -> Result<String> {
        canonical::to_string(self)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        canonical::write(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.queries.keys().any(|k| k.is_empty()) {
            return Err(Error::EmptyIdentifier("queries"));
        }
        if self.corpus.keys().any(|k| k.is_empty()) {
            return Err(Error::EmptyIdentifier("corpus"));
        }
        for (query, docs) in &self.relevant_docs {
            if !self.queries.contains_key(query) {
                return Err(Error::UnknownQuery(query.clone()));
            }
            if docs.is_empty() {
                return Err(Error::NoRelevantDocuments(query.clone()));
            }
            if let Some(missing) = docs.iter().find(|d| !self.corpus.contains_key(*d)) {
                return Err(Error::DanglingDocument {
                    query: query.clone(),
                    document: missing.clone(),
                });
            }
        }
        if let Some(orphan) = self.queries.keys().find(|q| !self.relevant_docs.contains_key(*q)) {
            return Err(Error::NoRelevantDocuments(orphan.clone()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &QueryId> {
        self.queries.keys()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &DocId> {
        self.corpus.keys()
    }

    /// Relevant documents of `query` as a set (empty if the query is unknown).
    pub fn relevant(&self, query: &str) -> BTreeSet<&str> {
        self.relevant_docs
            .get(query)
            .map(|docs| docs.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }
}
