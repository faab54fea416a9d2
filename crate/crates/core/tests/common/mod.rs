//! Independent oracles shared by integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use kgsim_core::embeddings::{complex, transe};
use kgsim_core::{EdgeRecord, GraphStore, Norm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/mini_vehicles.tsv");

pub fn fixture_store() -> GraphStore {
    let mut store = GraphStore::new();
    store.ingest_edges(FIXTURE).expect("fixture loads");
    store
}

/// Closure, ext and idf recomputed by a plain DFS from every node.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyOracle {
    pub parents: BTreeMap<String, BTreeSet<String>>,
    pub ext: BTreeMap<String, u32>,
    pub idf: BTreeMap<String, f64>,
    pub n: usize,
}

pub fn taxonomy_oracle(edges: &[(String, String, String)], subclass: &str, instance: &str) -> TaxonomyOracle {
    let mut nodes = BTreeSet::new();
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut classes = BTreeSet::new();
    for (a, p, b) in edges {
        nodes.insert(a.clone());
        nodes.insert(b.clone());
        if p == subclass || p == instance {
            out.entry(a.as_str()).or_default().push(b.as_str());
            if p == subclass {
                classes.insert(a.clone());
            }
            classes.insert(b.clone());
        }
    }

    let mut parents = BTreeMap::new();
    for v in &nodes {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = out.get(v.as_str()).cloned().unwrap_or_default();
        while let Some(x) = stack.pop() {
            if seen.insert(x.to_owned()) {
                stack.extend(out.get(x).cloned().unwrap_or_default());
            }
        }
        if classes.contains(v) {
            seen.insert(v.clone());
        }
        parents.insert(v.clone(), seen);
    }

    let n = nodes.len();
    let mut ext = BTreeMap::new();
    for set in parents.values() {
        for c in set {
            *ext.entry(c.clone()).or_insert(0u32) += 1;
        }
    }
    let idf = ext
        .iter()
        .map(|(c, &e)| (c.clone(), (n as f64 / e as f64).ln()))
        .collect();
    TaxonomyOracle { parents, ext, idf, n }
}

impl TaxonomyOracle {
    /// Weighted Jaccard straight from the definition.
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        let empty = BTreeSet::new();
        let pa = self.parents.get(a).unwrap_or(&empty);
        let pb = self.parents.get(b).unwrap_or(&empty);
        let num: f64 = pa.intersection(pb).map(|c| self.idf[c]).sum();
        let den: f64 = pa.union(pb).map(|c| self.idf[c]).sum();
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

pub fn store_edges(store: &GraphStore) -> Vec<(String, String, String)> {
    store
        .structural_edges()
        .map(|e| (e.node1.clone(), e.property.clone(), e.node2.clone()))
        .collect()
}

/// Random is-a graph over `n` nodes. With `dag`, edges only point from
/// higher to lower node numbers.
pub fn random_taxonomy(rng: &mut impl Rng, n: usize, dag: bool) -> Vec<(String, String, String)> {
    let mut edges = Vec::new();
    for v in 1..n {
        let fanout = rng.random_range(0..=3);
        for _ in 0..fanout {
            let target = if dag { rng.random_range(0..v) } else { rng.random_range(0..n) };
            let prop = if rng.random_bool(0.7) { "P279" } else { "P31" };
            edges.push((format!("n{v}"), prop.to_owned(), format!("n{target}")));
        }
        if rng.random_bool(0.1) {
            // unrelated structure that must not affect the taxonomy
            edges.push((format!("n{v}"), "P17".to_owned(), format!("n{}", rng.random_range(0..n))));
        }
    }
    if edges.is_empty() {
        edges.push(("n1".into(), "P279".into(), "n0".into()));
    }
    edges
}

pub fn to_store(edges: &[(String, String, String)]) -> GraphStore {
    GraphStore::from_edges(edges.iter().map(|(a, p, b)| EdgeRecord::new(a, p, b)))
}

/// Exhaustive scan: every other row, ascending by (distance, id).
pub fn brute_force_knn(rows: &[(String, Vec<f64>)], query: &str, k: usize, cosine: bool) -> Vec<(String, f64)> {
    let q = &rows.iter().find(|(id, _)| id == query).unwrap().1;
    let mut all: Vec<(String, f64)> = rows
        .iter()
        .filter(|(id, _)| id != query)
        .map(|(id, v)| {
            let d = if cosine {
                let dot: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
                let nq = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (1.0 - dot / (nq * nv)).max(0.0)
            } else {
                q.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            };
            (id.clone(), d)
        })
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Gaussian-mixture vectors: `clusters` random centers, points scattered
/// around them.
pub fn clustered_vectors(seed: u64, n: usize, dim: usize, clusters: usize) -> Vec<(String, Vec<f64>)> {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = Normal::new(0.0, 1.0).unwrap();
    let spread = Normal::new(0.0, 0.35).unwrap();
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| center.sample(&mut rng)).collect())
        .collect();
    (0..n)
        .map(|i| {
            let c = &centers[rng.random_range(0..clusters)];
            let v = c.iter().map(|x| x + spread.sample(&mut rng)).collect();
            (format!("v{i:04}"), v)
        })
        .collect()
}

pub fn gaussian_vectors(seed: u64, n: usize, dim: usize) -> Vec<(String, Vec<f64>)> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let v = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            (format!("v{i:04}"), v)
        })
        .collect()
}

/// ComplEx score with explicit complex arithmetic, one component at a time.
pub fn naive_complex_score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let d = h.len() / 2;
    let mut total = 0.0;
    for k in 0..d {
        let (a, b) = (h[k], h[d + k]);
        let (c, e) = (r[k], r[d + k]);
        let (f, g) = (t[k], -t[d + k]); // conj(t)
        // (a + bi)(c + ei) = (ac - be) + (ae + bc)i
        let (pr, pi) = (a * c - b * e, a * e + b * c);
        // real part of (pr + pi i)(f + g i)
        total += pr * f - pi * g;
    }
    total
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let up = f(&probe);
            probe[i] = x[i] - eps;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Max elementwise relative error, with an absolute floor for tiny entries.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

pub const GRADIENT_EPS: f64 = 1e-5;
pub const GRADIENT_TOLERANCE: f64 = 1e-3;

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn split6(x: &[f64], d: usize) -> [&[f64]; 6] {
    [&x[..d], &x[d..2 * d], &x[2 * d..3 * d], &x[3 * d..4 * d], &x[4 * d..5 * d], &x[5 * d..]]
}

/// Relative gradient error of the TransE margin loss on one random
/// instance with an active hinge, away from the L1 kinks.
pub fn check_transe_gradient(rng: &mut impl Rng, norm: Norm) -> f64 {
    let dim = rng.random_range(1..=8);
    // large margin keeps the hinge active: d <= 3 * dim for inputs in (-1, 1)
    let margin = 3.0 * dim as f64 + 1.0;
    let x = loop {
        let x = random_vec(rng, 6 * dim);
        let v = split6(&x, dim);
        let near_kink = (0..dim).any(|k| {
            (v[0][k] + v[1][k] - v[2][k]).abs() < 1e-3 || (v[3][k] + v[4][k] - v[5][k]).abs() < 1e-3
        });
        if !near_kink {
            break x;
        }
    };
    let loss = |x: &[f64]| {
        let v = split6(x, dim);
        transe::margin_loss((v[0], v[1], v[2]), (v[3], v[4], v[5]), margin, norm).0
    };
    let v = split6(&x, dim);
    let (l, gp, gn) = transe::margin_loss((v[0], v[1], v[2]), (v[3], v[4], v[5]), margin, norm);
    assert!(l > 0.0);
    let analytic: Vec<f64> = [gp.head, gp.relation, gp.tail, gn.head, gn.relation, gn.tail].concat();
    max_relative_error(&analytic, &finite_difference(&x, GRADIENT_EPS, loss))
}

/// Relative gradient error of the ComplEx logistic loss on one random
/// instance.
pub fn check_complex_gradient(rng: &mut impl Rng) -> f64 {
    let dim = rng.random_range(1..=8);
    let width = 2 * dim;
    let x = random_vec(rng, 3 * width);
    let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let reg = rng.random_range(0.0..0.1);
    let loss = |x: &[f64]| complex::logistic_loss(&x[..width], &x[width..2 * width], &x[2 * width..], label, reg).0;
    let (_, g) = complex::logistic_loss(&x[..width], &x[width..2 * width], &x[2 * width..], label, reg);
    let analytic = [g.head, g.relation, g.tail].concat();
    max_relative_error(&analytic, &finite_difference(&x, GRADIENT_EPS, loss))
}
