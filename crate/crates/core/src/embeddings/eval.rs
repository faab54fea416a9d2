//! Filtered tail-prediction ranking for trained tables.

use crate::embeddings::train::TripleSet;
use crate::embeddings::{complex, transe, EmbeddingTable, Norm};
use crate::error::{Error, Result};
use crate::graph::GraphStore;

/// Which triple score to rank with; higher is better for both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleModel {
    Transe(Norm),
    Complex,
}

impl TripleModel {
    pub fn score(self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        match self {
            TripleModel::Transe(norm) => -transe::distance(h, r, t, norm),
            TripleModel::Complex => complex::score(h, r, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPrediction {
    /// 1-based filtered rank of the true tail, one per evaluated triple.
    pub ranks: Vec<usize>,
}

impl LinkPrediction {
    pub fn hits_at(&self, k: usize) -> f64 {
        if self.ranks.is_empty() {
            return 0.0;
        }
        self.ranks.iter().filter(|&&r| r <= k).count() as f64 / self.ranks.len() as f64
    }

    pub fn mean_rank(&self) -> f64 {
        if self.ranks.is_empty() {
            return 0.0;
        }
        self.ranks.iter().sum::<usize>() as f64 / self.ranks.len() as f64
    }

    pub fn mrr(&self) -> f64 {
        if self.ranks.is_empty() {
            return 0.0;
        }
        self.ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / self.ranks.len() as f64
    }
}

/// Rank every structural triple's tail against all entities in the table.
///
/// Other known true tails for the same `(h, r)` are skipped; ties count
/// against the true tail.
pub fn tail_prediction(store: &GraphStore, table: &EmbeddingTable, model: TripleModel) -> Result<LinkPrediction> {
    let triples = TripleSet::from_store(store)?;
    let candidates: Vec<(u32, &[f64])> = triples
        .entities
        .iter()
        .enumerate()
        .filter_map(|(i, id)| table.get(id).map(|v| (i as u32, v)))
        .collect();

    let mut ranks = Vec::with_capacity(triples.triples.len());
    for &(h, r, t) in &triples.triples {
        let lookup = |i: u32| {
            let id = &triples.entities[i as usize];
            table.get(id).ok_or_else(|| Error::NotFound(id.clone()))
        };
        let rel_id = &triples.relations[r as usize];
        let rv = table.relation(rel_id).ok_or_else(|| Error::NotFound(rel_id.clone()))?;
        let hv = lookup(h)?;
        let true_score = model.score(hv, rv, lookup(t)?);
        let better = candidates
            .iter()
            .filter(|&&(e, _)| e != t && !triples.is_known((h, r, e)))
            .filter(|(_, ev)| model.score(hv, rv, ev) >= true_score)
            .count();
        ranks.push(better + 1);
    }
    Ok(LinkPrediction { ranks })
}
