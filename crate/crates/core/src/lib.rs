//! Data-side machinery for training retrieval embedding models.
//!
//! The crate covers the full preparation pipeline:
//!
//! - [`dataset`], [`erm`], [`context`] and [`instruction`]: retrieval datasets,
//!   entity relationship map documents, context-size accounting and the
//!   instruction template applied to queries and passages.
//! - [`embeddings`]: an immutable identifier → vector store loaded from JSONL.
//! - [`similarity`]: cosine similarity, exhaustive ranking and rank@1 evaluation.
//! - [`collation`]: model-aware selection of soft (high-similarity) and hard
//!   (low-similarity) negatives per query.
//! - [`planner`]: smallest effective batch size and balanced batch planning.
//! - [`trainer`]: a small linear embedding model trained with InfoNCE and
//!   early stopping, exercising the pipeline end to end.
//!
//! Terminology note: a *soft* negative here is a confusable document with high
//! similarity to the query, and a *hard* negative is a clearly unrelated one.
//! This is the reverse of the usual IR convention.

pub mod canonical;
pub mod collation;
pub mod context;
pub mod dataset;
pub mod embeddings;
pub mod erm;
pub mod error;
pub mod instruction;
pub mod planner;
pub mod seed;
pub mod similarity;
pub mod synthetic;
pub mod trainer;

pub use collation::{build_collation_map, classify_negatives, CollationEntry, CollationMap};
pub use dataset::RetrievalDataset;
pub use embeddings::{EmbeddingStore, EmbeddingVector};
pub use error::{Error, Result};
pub use planner::{min_effective_batch_size, plan_batches, BatchPlan, BatchRecord};
pub use similarity::{cosine_similarity, evaluate, rank_documents, EvalReport, RankedList, Scope};

/// Query identifier.
pub type QueryId = String;
/// Corpus document identifier.
pub type DocId = String;
