//! Text vectors for lexicalized nodes.
//!
//! Language-model vectors are computed outside this crate and loaded with
//! [`EmbeddingTable::read_vectors`]. A [`VectorProvider`] can be plugged in
//! instead; [`HashedBagProvider`] is a dependency-free stand-in.

use std::hash::Hasher;

use fnv::FnvHasher;

use crate::embeddings::{lexicalize, EmbeddingKind, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{tokenize, GraphStore};

/// Maps a sentence to a fixed-length vector.
pub trait VectorProvider {
    fn dim(&self) -> usize;
    fn embed(&self, sentence: &str) -> Vec<f64>;
}

/// Signed feature hashing of case-folded tokens.
#[derive(Debug, Clone, Copy)]
pub struct HashedBagProvider {
    dim: usize,
}

impl HashedBagProvider {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("text vector dim must be positive".into()));
        }
        Ok(Self { dim })
    }
}

impl VectorProvider for HashedBagProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, sentence: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for token in tokenize(sentence) {
            let mut hasher = FnvHasher::default();
            hasher.write(token.as_bytes());
            let h = hasher.finish();
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        v
    }
}

/// Embed the lexicalization of every graph node.
pub fn text_table(store: &GraphStore, provider: &dyn VectorProvider) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(EmbeddingKind::Text, provider.dim());
    for node in store.nodes() {
        let vector = provider.embed(&lexicalize(store, node));
        table.insert(node, vector)?;
    }
    Ok(table)
}
