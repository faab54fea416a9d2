//! Pairwise node similarity over a knowledge graph.
//!
//! Four scores are available for a pair of nodes:
//!
//! * `class`: IDF-weighted overlap of the nodes' is-a parents ([`taxonomy`]),
//! * `transe` / `complex`: cosine of graph-embedding vectors ([`embeddings`]),
//! * `text`: cosine of vectors computed over each node's lexicalization.
//!
//! [`knn`] answers top-k neighbor queries over any embedding table and
//! [`engine::Engine`] ties everything together for the CLI and HTTP service.

pub mod artifacts;
pub mod embeddings;
pub mod engine;
pub mod error;
pub mod graph;
pub mod knn;
pub mod taxonomy;

pub use embeddings::{EmbeddingKind, EmbeddingTable, Norm, TrainConfig, TrainReport};
pub use engine::{Algorithm, Engine, SearchHit, SimilarityReport};
pub use error::{Error, Result};
pub use graph::{EdgeRecord, GraphStore, LabelMatch, NodeMeta};
pub use knn::{IndexConfig, IndexMode, KnnIndex, Metric, NeighborHit};
pub use taxonomy::{SharedParent, TaxonomyConfig, TaxonomyIndex};
