//! Group recommendation over automatically detected user groups.
//!
//! Users are grouped by how similar their review texts are (TF-IDF or
//! externally supplied sentence vectors, cosine affinity, spectral
//! clustering, majority vote per user). Each detected group then receives an
//! order-aware recommendation vector from one of four consensus functions:
//! least misery (`lmm`), least misery with priority (`lmmp`), greedy
//! aggregation (`gram`) and Hungarian aggregation (`ham`).
//!
//! The crate also ships pair-counting cluster validation (Rand index, ARI,
//! pair precision/recall/F), the silhouette coefficient used to pick the
//! number of clusters, and a Predict & Cluster baseline (user-based
//! collaborative filtering followed by k-means).

pub mod baseline;
pub mod cli;
pub mod clustering;
pub mod consensus;
pub mod corpus;
pub mod embedding;
mod error;
pub mod validation;

pub use error::{Error, Result};

/// The bundled 30-review synthetic corpus (two disjoint vocabularies).
pub const MINI_CORPUS: &str = include_str!("../data/mini_corpus.jsonl");

/// Planted topic labels for [`MINI_CORPUS`], CSV `instance_id,label`.
pub const MINI_CORPUS_LABELS: &str = include_str!("../data/mini_corpus_labels.csv");
