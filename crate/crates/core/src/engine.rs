//! Query façade shared by the CLI and the HTTP service.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingKind, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::GraphStore;
use crate::knn::{KnnIndex, NeighborHit};
use crate::taxonomy::{SharedParent, TaxonomyIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Class,
    Transe,
    Complex,
    Text,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Class, Self::Transe, Self::Complex, Self::Text];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Class => "class",
            Self::Transe => "transe",
            Self::Complex => "complex",
            Self::Text => "text",
        }
    }

    pub fn table_kind(self) -> Option<EmbeddingKind> {
        match self {
            Self::Class => None,
            Self::Transe => Some(EmbeddingKind::Transe),
            Self::Complex => Some(EmbeddingKind::Complex),
            Self::Text => Some(EmbeddingKind::Text),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Scores of one secondary node against the primary node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityReport {
    pub qnode1: String,
    pub qnode2: String,
    /// One entry per enabled algorithm; `None` when a node lacks the data.
    pub scores: IndexMap<Algorithm, Option<f64>>,
    pub labels: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shared_parents: Option<Vec<SharedParent>>,
}

impl SimilarityReport {
    pub fn score(&self, algorithm: Algorithm) -> Option<f64> {
        self.scores.get(&algorithm).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub qnode: String,
    pub label: String,
    pub description: String,
}

pub struct Engine {
    store: GraphStore,
    taxonomy: TaxonomyIndex,
    tables: BTreeMap<EmbeddingKind, EmbeddingTable>,
    indices: BTreeMap<EmbeddingKind, KnnIndex>,
    algorithms: Vec<Algorithm>,
    neighbors_table: EmbeddingKind,
}

impl Engine {
    pub fn new(store: GraphStore, taxonomy: TaxonomyIndex) -> Self {
        Self {
            store,
            taxonomy,
            tables: BTreeMap::new(),
            indices: BTreeMap::new(),
            algorithms: Algorithm::ALL.to_vec(),
            neighbors_table: EmbeddingKind::Complex,
        }
    }

    pub fn add_table(&mut self, table: EmbeddingTable) {
        self.tables.insert(table.kind(), table);
    }

    pub fn add_index(&mut self, kind: EmbeddingKind, index: KnnIndex) {
        self.indices.insert(kind, index);
    }

    pub fn set_algorithms(&mut self, algorithms: Vec<Algorithm>) {
        self.algorithms = algorithms;
    }

    pub fn set_neighbors_table(&mut self, kind: EmbeddingKind) {
        self.neighbors_table = kind;
    }

    pub fn neighbors_table(&self) -> EmbeddingKind {
        self.neighbors_table
    }

    pub fn store(&self) -> &GraphStore {
        &self.store
    }

    pub fn taxonomy(&self) -> &TaxonomyIndex {
        &self.taxonomy
    }

    pub fn table(&self, kind: EmbeddingKind) -> Option<&EmbeddingTable> {
        self.tables.get(&kind)
    }

    pub fn index(&self, kind: EmbeddingKind) -> Option<&KnnIndex> {
        self.indices.get(&kind)
    }

    pub fn algorithms(&self) -> &[Algorithm] {
        &self.algorithms
    }

    fn score(&self, algorithm: Algorithm, a: &str, b: &str) -> Option<f64> {
        match algorithm.table_kind() {
            None => (self.store.contains(a) && self.store.contains(b))
                .then(|| self.taxonomy.class_similarity(a, b)),
            Some(kind) => self.tables.get(&kind)?.cosine(a, b).ok(),
        }
    }

    /// One report per secondary node. Fails only when `primary` is unknown.
    pub fn compare(&self, primary: &str, secondaries: &[&str], explain: bool) -> Result<Vec<SimilarityReport>> {
        if !self.store.contains(primary) {
            return Err(Error::NotFound(primary.to_owned()));
        }
        Ok(secondaries
            .iter()
            .map(|&other| {
                let scores = self
                    .algorithms
                    .iter()
                    .map(|&alg| (alg, self.score(alg, primary, other)))
                    .collect();
                let labels = [primary, other]
                    .into_iter()
                    .map(|id| (id.to_owned(), self.store.display_label(id)))
                    .collect();
                SimilarityReport {
                    qnode1: primary.to_owned(),
                    qnode2: other.to_owned(),
                    scores,
                    labels,
                    shared_parents: explain.then(|| self.taxonomy.shared_parents(primary, other)),
                }
            })
            .collect())
    }

    /// k nearest neighbors from the index for `kind` (default table when
    /// `None`).
    pub fn neighbors(&self, qnode: &str, k: usize, kind: Option<EmbeddingKind>) -> Result<Vec<NeighborHit>> {
        let kind = kind.unwrap_or(self.neighbors_table);
        let index = self
            .indices
            .get(&kind)
            .ok_or_else(|| Error::NotFound(format!("no {kind} index loaded")))?;
        index.nearest_neighbors(qnode, k, Some(&self.store))
    }

    pub fn search(&self, query: &str, limit: usize) -> Vec<SearchHit> {
        self.store
            .search_labels(query, limit)
            .into_iter()
            .map(|m| SearchHit {
                description: self.store.description(&m.id).unwrap_or_default().to_owned(),
                qnode: m.id,
                label: m.label,
            })
            .collect()
    }
}
