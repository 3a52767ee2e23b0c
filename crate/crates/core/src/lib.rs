//! Recursive LLM-assisted thematic mapping of document corpora.
//!
//! The crate covers the whole analysis chain: corpus ingestion and full-text
//! segmentation, an embedding/chat provider gateway with offline stubs,
//! spherical K-means, prompt-driven theme synthesis, the recursive primary
//! classification loop with 3-of-5 consensus, multi-label segment
//! classification, bipartite flow aggregation, lexical validation
//! (bag-of-words, Zipf profiles, class-based TF-IDF) and alignment metrics
//! against editorial dual labels.
//!
//! Numerical code is generic over [`Scalar`]; the aliases below pin the
//! `f64` instantiations used by the pipeline.

pub mod alignment;
pub mod corpus;
pub mod graph;
pub mod lexical;
pub mod primary;
pub mod provider;
pub mod scalar;
pub mod secondary;
pub mod svg;
pub mod synthesis;
pub mod synthetic;
pub mod vector;

pub use scalar::Scalar;

/// Embedding vector over `f64`, the precision used by the pipeline.
pub type Embedding = vector::EmbeddingVector<f64>;
/// Single-precision embedding, for memory-bound callers.
pub type Embedding32 = vector::EmbeddingVector<f32>;
/// K-means result over `f64` embeddings.
pub type Clustering = vector::ClusterAssignment<f64>;
/// Class-based TF-IDF table with `f64` scores.
pub type Ctfidf = lexical::CtfidfTable<f64>;
/// Row-normalized adjacency matrix with `f64` shares.
pub type NormalizedAdjacency = graph::NormalizedMatrix<f64>;
/// Alignment report with `f64` metrics.
pub type Alignment = alignment::AlignmentReport<f64>;
