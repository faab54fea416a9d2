//! Class-based similarity over the is-a taxonomy.
//!
//! One is-a step is either a subclass-of or an instance-of edge. Each node's
//! parent set is the transitive closure of those steps; nodes that act as
//! classes (either end of a subclass edge, or the target of an instance
//! edge) are also their own parents. Every class `c` carries
//! `idf(c) = ln(N / ext(c))`, where `ext(c)` counts graph nodes whose
//! parent set contains `c` and `N` is the number of graph nodes.
//!
//! Similarity is the IDF-weighted Jaccard index of two parent sets.

use std::collections::{BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphStore;

pub const SUBCLASS_OF: &str = "P279";
pub const INSTANCE_OF: &str = "P31";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyConfig {
    pub subclass_property: String,
    pub instance_property: String,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        Self {
            subclass_property: SUBCLASS_OF.to_owned(),
            instance_property: INSTANCE_OF.to_owned(),
        }
    }
}

impl TaxonomyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subclass_property.is_empty() || self.instance_property.is_empty() {
            return Err(Error::Config("taxonomy property ids must be non-empty".into()));
        }
        if self.subclass_property == self.instance_property {
            return Err(Error::Config(format!(
                "subclass and instance properties must differ (both {:?})",
                self.subclass_property
            )));
        }
        Ok(())
    }
}

/// A shared is-a parent and its IDF weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedParent {
    pub qnode: String,
    pub idf: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxonomyIndex {
    config: TaxonomyConfig,
    /// Graph node ids, sorted; positions are the interned ids below.
    ids: Vec<String>,
    classes: Vec<bool>,
    /// Sorted interned parent ids per node.
    parents: Vec<Vec<u32>>,
    ext: Vec<u32>,
    idf: Vec<f64>,
    total_nodes: usize,
    #[serde(skip)]
    lookup: HashMap<String, u32>,
}

impl TaxonomyIndex {
    pub fn build(store: &GraphStore, config: &TaxonomyConfig) -> Result<Self> {
        config.validate()?;

        let ids: Vec<String> = store.nodes().map(str::to_owned).collect();
        let lookup: HashMap<String, u32> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let n = ids.len();

        let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
        for _ in 0..n {
            graph.add_node(());
        }
        let mut classes = vec![false; n];
        let mut self_loop = vec![false; n];
        for edge in store.structural_edges() {
            let subclass = edge.property == config.subclass_property;
            if !subclass && edge.property != config.instance_property {
                continue;
            }
            let (from, to) = (lookup[&edge.node1], lookup[&edge.node2]);
            graph.update_edge(NodeIndex::new(from as usize), NodeIndex::new(to as usize), ());
            if subclass {
                classes[from as usize] = true;
            }
            classes[to as usize] = true;
            if from == to {
                self_loop[from as usize] = true;
            }
        }

        // Components come out sinks first, so every successor component is
        // closed before it is needed.
        let components = tarjan_scc(&graph);
        let mut component_of = vec![usize::MAX; n];
        let mut closures: Vec<Vec<u32>> = Vec::with_capacity(components.len());
        for (ci, members) in components.iter().enumerate() {
            for m in members {
                component_of[m.index()] = ci;
            }
            let mut closure = BTreeSet::new();
            if members.len() > 1 || self_loop[members[0].index()] {
                closure.extend(members.iter().map(|m| m.index() as u32));
            }
            for m in members {
                for succ in graph.neighbors(*m) {
                    let sc = component_of[succ.index()];
                    if sc == ci {
                        continue;
                    }
                    closure.insert(succ.index() as u32);
                    closure.extend(closures[sc].iter().copied());
                }
            }
            closures.push(closure.into_iter().collect());
        }

        let mut parents = Vec::with_capacity(n);
        for v in 0..n {
            let closure = &closures[component_of[v]];
            let mut set = closure.clone();
            if classes[v] {
                if let Err(pos) = set.binary_search(&(v as u32)) {
                    set.insert(pos, v as u32);
                }
            }
            parents.push(set);
        }

        let mut ext = vec![0u32; n];
        for set in &parents {
            for &c in set {
                ext[c as usize] += 1;
            }
        }
        let idf = ext
            .iter()
            .map(|&e| if e == 0 { 0.0 } else { (n as f64 / e as f64).ln() })
            .collect();

        Ok(Self {
            config: config.clone(),
            ids,
            classes,
            parents,
            ext,
            idf,
            total_nodes: n,
            lookup,
        })
    }

    pub fn config(&self) -> &TaxonomyConfig {
        &self.config
    }

    pub fn total_nodes(&self) -> usize {
        self.total_nodes
    }

    fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).map(|&i| i as usize)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.lookup.contains_key(id)
    }

    pub fn is_class(&self, id: &str) -> bool {
        self.index_of(id).is_some_and(|i| self.classes[i])
    }

    /// The reflexive-transitive is-a parents of `id`, in id order.
    pub fn parents(&self, id: &str) -> Vec<&str> {
        self.index_of(id)
            .map(|i| {
                self.parents[i]
                    .iter()
                    .map(|&c| self.ids[c as usize].as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Number of graph nodes whose closure contains `class`; `None` when it
    /// is nobody's parent.
    pub fn ext(&self, class: &str) -> Option<u32> {
        self.index_of(class)
            .map(|i| self.ext[i])
            .filter(|&e| e > 0)
    }

    pub fn idf(&self, class: &str) -> Option<f64> {
        self.index_of(class)
            .filter(|&i| self.ext[i] > 0)
            .map(|i| self.idf[i])
    }

    /// Indexed classes (ext > 0) with their ext and idf, in id order.
    pub fn classes(&self) -> impl Iterator<Item = (&str, u32, f64)> {
        (0..self.ids.len())
            .filter(|&i| self.ext[i] > 0)
            .map(|i| (self.ids[i].as_str(), self.ext[i], self.idf[i]))
    }

    /// IDF-weighted Jaccard similarity of the two parent sets, in `[0, 1]`.
    pub fn class_similarity(&self, a: &str, b: &str) -> f64 {
        let (Some(ia), Some(ib)) = (self.index_of(a), self.index_of(b)) else {
            return 0.0;
        };
        let (pa, pb) = (&self.parents[ia], &self.parents[ib]);
        let (mut shared, mut union) = (0.0, 0.0);
        let (mut i, mut j) = (0, 0);
        // both sums run in class order so the result is symmetric bit-for-bit
        while i < pa.len() || j < pb.len() {
            let next = match (pa.get(i), pb.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    shared += self.idf[x as usize];
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (_, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            union += self.idf[next as usize];
        }
        if union > 0.0 {
            (shared / union).min(1.0)
        } else {
            0.0
        }
    }

    /// Common parents sorted by idf (desc), then id.
    pub fn shared_parents(&self, a: &str, b: &str) -> Vec<SharedParent> {
        let (Some(ia), Some(ib)) = (self.index_of(a), self.index_of(b)) else {
            return Vec::new();
        };
        let pb = &self.parents[ib];
        let mut shared: Vec<SharedParent> = self.parents[ia]
            .iter()
            .filter(|c| pb.binary_search(c).is_ok())
            .map(|&c| SharedParent {
                qnode: self.ids[c as usize].clone(),
                idf: self.idf[c as usize],
            })
            .collect();
        shared.sort_by(|x, y| y.idf.total_cmp(&x.idf).then_with(|| x.qnode.cmp(&y.qnode)));
        shared
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("taxonomy index serializes")
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<Self> {
        let mut index: Self = serde_json::from_slice(bytes)?;
        index.lookup = index
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Ok(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeRecord;

    fn taxonomy(edges: &[(&str, &str, &str)]) -> TaxonomyIndex {
        let store = GraphStore::from_edges(edges.iter().map(|&(a, p, b)| EdgeRecord::new(a, p, b)));
        TaxonomyIndex::build(&store, &TaxonomyConfig::default()).unwrap()
    }

    #[test]
    fn chain_is_transitive() {
        let t = taxonomy(&[("dirt", "P279", "moto"), ("moto", "P279", "mv")]);
        assert_eq!(t.parents("dirt"), vec!["dirt", "moto", "mv"]);
        assert_eq!(t.ext("mv"), Some(3));
        assert_eq!(t.idf("mv"), Some(0.0));
    }

    #[test]
    fn instances_are_not_their_own_parents() {
        let t = taxonomy(&[("m1", "P31", "moto"), ("moto", "P279", "mv")]);
        assert_eq!(t.parents("m1"), vec!["moto", "mv"]);
        assert!(!t.is_class("m1"));
        assert!(t.is_class("moto"));
    }

    #[test]
    fn cycles_share_one_parent_set() {
        let t = taxonomy(&[("a", "P279", "b"), ("b", "P279", "c"), ("c", "P279", "a"), ("c", "P279", "top")]);
        for v in ["a", "b", "c"] {
            assert_eq!(t.parents(v), vec!["a", "b", "c", "top"]);
        }
    }

    #[test]
    fn no_taxonomy_edges() {
        let t = taxonomy(&[("a", "P17", "b")]);
        assert!(t.parents("a").is_empty());
        assert_eq!(t.class_similarity("a", "a"), 0.0);
        assert_eq!(t.classes().count(), 0);
    }

    #[test]
    fn similarity_edge_cases() {
        let t = taxonomy(&[("a", "P279", "x"), ("b", "P279", "y"), ("y", "P279", "z")]);
        assert_eq!(t.class_similarity("a", "a"), 1.0);
        assert_eq!(t.class_similarity("a", "b"), 0.0);
        assert!(t.shared_parents("a", "b").is_empty());
        assert_eq!(t.class_similarity("a", "nope"), 0.0);
        let own: Vec<_> = t.shared_parents("b", "b").into_iter().map(|p| p.qnode).collect();
        assert_eq!(own.len(), t.parents("b").len());
    }

    #[test]
    fn config_validation() {
        let same = TaxonomyConfig {
            subclass_property: "P1".into(),
            instance_property: "P1".into(),
        };
        assert!(same.validate().is_err());
        let empty = TaxonomyConfig {
            subclass_property: String::new(),
            ..Default::default()
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn custom_properties() {
        let store = GraphStore::from_edges([EdgeRecord::new("a", "sub", "b"), EdgeRecord::new("a", "P279", "c")]);
        let cfg = TaxonomyConfig {
            subclass_property: "sub".into(),
            instance_property: "inst".into(),
        };
        let t = TaxonomyIndex::build(&store, &cfg).unwrap();
        assert_eq!(t.parents("a"), vec!["a", "b"]);
    }

    #[test]
    fn json_round_trip() {
        let t = taxonomy(&[("a", "P279", "b"), ("i", "P31", "a")]);
        let back = TaxonomyIndex::from_json(&t.to_json()).unwrap();
        assert_eq!(back.parents("i"), t.parents("i"));
        assert_eq!(back.class_similarity("a", "i"), t.class_similarity("a", "i"));
    }
}
