//! Training plumbing shared by the TransE and ComplEx trainers.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphStore;

/// Distance used inside the TransE score `d(h + r, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            other => Err(Error::Config(format!("unknown norm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Margin γ of the TransE ranking loss.
    pub margin: f64,
    pub negatives: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub norm: Norm,
    /// L2 penalty weight of the ComplEx loss; may be zero.
    pub regularization: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            epochs: 200,
            learning_rate: 0.05,
            margin: 1.0,
            negatives: 5,
            batch_size: 64,
            seed: 42,
            norm: Norm::L2,
            regularization: 1e-4,
        }
    }
}

impl TrainConfig {
    /// ComplEx gradients are products of two small factors, so it needs a
    /// larger step than TransE to converge in the same number of epochs.
    pub fn complex_default() -> Self {
        Self {
            learning_rate: 0.5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim > 0),
            ("epochs", self.epochs > 0),
            ("learning_rate", self.learning_rate > 0.0 && self.learning_rate.is_finite()),
            ("margin", self.margin > 0.0 && self.margin.is_finite()),
            ("negatives", self.negatives > 0),
            ("batch_size", self.batch_size > 0),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, ok)| !ok) {
            return Err(Error::Config(format!("{name} must be strictly positive")));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::Config("regularization must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-epoch mean loss of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Interned training triples over the graph's structural edges.
#[derive(Debug, Clone)]
pub struct TripleSet {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub triples: Vec<(u32, u32, u32)>,
    known: HashSet<(u32, u32, u32)>,
}

impl TripleSet {
    pub fn from_store(store: &GraphStore) -> Result<Self> {
        let mut entities = BTreeSet::new();
        let mut relations = BTreeSet::new();
        for edge in store.structural_edges() {
            entities.insert(edge.node1.as_str());
            entities.insert(edge.node2.as_str());
            relations.insert(edge.property.as_str());
        }
        if entities.is_empty() {
            return Err(Error::Config(
                "graph has no trainable triples (only literal or metadata edges)".into(),
            ));
        }
        let entities: Vec<String> = entities.into_iter().map(str::to_owned).collect();
        let relations: Vec<String> = relations.into_iter().map(str::to_owned).collect();
        let ent: HashMap<&str, u32> = entities.iter().enumerate().map(|(i, e)| (e.as_str(), i as u32)).collect();
        let rel: HashMap<&str, u32> = relations.iter().enumerate().map(|(i, r)| (r.as_str(), i as u32)).collect();

        let mut triples = Vec::new();
        let mut known = HashSet::new();
        for edge in store.structural_edges() {
            let t = (ent[edge.node1.as_str()], rel[edge.property.as_str()], ent[edge.node2.as_str()]);
            if known.insert(t) {
                triples.push(t);
            }
        }
        Ok(Self {
            entities,
            relations,
            triples,
            known,
        })
    }

    pub fn is_known(&self, triple: (u32, u32, u32)) -> bool {
        self.known.contains(&triple)
    }

    pub fn entity_index(&self, id: &str) -> Option<u32> {
        self.entities.binary_search_by(|e| e.as_str().cmp(id)).ok().map(|i| i as u32)
    }

    pub fn relation_index(&self, id: &str) -> Option<u32> {
        self.relations.binary_search_by(|r| r.as_str().cmp(id)).ok().map(|i| i as u32)
    }
}

const MAX_CORRUPTION_ATTEMPTS: usize = 16;

/// Seeded corruption of heads or tails, rejecting known true triples.
pub(crate) struct NegativeSampler {
    rng: ChaCha8Rng,
}

impl NegativeSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// `None` when every attempted corruption was a true triple.
    pub fn corrupt(&mut self, triples: &TripleSet, (h, r, t): (u32, u32, u32)) -> Option<(u32, u32, u32)> {
        let n = triples.entities.len() as u32;
        for _ in 0..MAX_CORRUPTION_ATTEMPTS {
            let e = self.rng.random_range(0..n);
            let candidate = if self.rng.random_bool(0.5) { (e, r, t) } else { (h, r, e) };
            if !triples.is_known(candidate) {
                return Some(candidate);
            }
        }
        None
    }
}

/// Row-major parameter matrix with a sparse gradient accumulator.
#[derive(Debug, Clone)]
pub(crate) struct Params {
    pub width: usize,
    pub data: Vec<f64>,
    grad: Vec<f64>,
    touched: Vec<u32>,
    dirty: Vec<bool>,
}

impl Params {
    pub fn uniform(rows: usize, width: usize, bound: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * width).map(|_| rng.random_range(-bound..bound)).collect();
        Self {
            width,
            data,
            grad: vec![0.0; rows * width],
            touched: Vec::new(),
            dirty: vec![false; rows],
        }
    }

    pub fn row(&self, i: u32) -> &[f64] {
        let s = i as usize * self.width;
        &self.data[s..s + self.width]
    }

    pub fn accumulate(&mut self, i: u32, g: &[f64], scale: f64) {
        if !self.dirty[i as usize] {
            self.dirty[i as usize] = true;
            self.touched.push(i);
        }
        let s = i as usize * self.width;
        for (acc, x) in self.grad[s..s + self.width].iter_mut().zip(g) {
            *acc += scale * x;
        }
    }

    /// `param -= step * grad` on touched rows, then clear the accumulator.
    pub fn apply(&mut self, step: f64) {
        // sorted so floating-point updates do not depend on visit order
        self.touched.sort_unstable();
        for &i in &self.touched {
            let s = i as usize * self.width;
            for k in s..s + self.width {
                self.data[k] -= step * self.grad[k];
                self.grad[k] = 0.0;
            }
            self.dirty[i as usize] = false;
        }
        self.touched.clear();
    }

    pub fn normalize_rows(&mut self) {
        for row in self.data.chunks_mut(self.width) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeRecord;

    #[test]
    fn literal_edges_are_not_triples() {
        let store = GraphStore::from_edges([
            EdgeRecord::new("a", "P1", "b"),
            EdgeRecord::with_literal("a", "label", "A"),
            EdgeRecord::with_literal("a", "P1082", "12"),
        ]);
        let set = TripleSet::from_store(&store).unwrap();
        assert_eq!(set.triples.len(), 1);
        assert_eq!(set.entities, vec!["a", "b"]);
    }

    #[test]
    fn metadata_only_graph_is_untrainable() {
        let store = GraphStore::from_edges([EdgeRecord::with_literal("a", "label", "A")]);
        assert!(matches!(TripleSet::from_store(&store), Err(Error::Config(_))));
    }

    #[test]
    fn sampler_never_returns_true_triples() {
        let store = GraphStore::from_edges([
            EdgeRecord::new("a", "r", "b"),
            EdgeRecord::new("b", "r", "c"),
            EdgeRecord::new("c", "r", "a"),
        ]);
        let set = TripleSet::from_store(&store).unwrap();
        let mut sampler = NegativeSampler::new(7);
        for _ in 0..500 {
            if let Some(neg) = sampler.corrupt(&set, set.triples[0]) {
                assert!(!set.is_known(neg));
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { dim: 0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { margin: -1.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { regularization: -0.1, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
