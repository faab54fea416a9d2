//! Top-k nearest-neighbor retrieval over an embedding table.
//!
//! [`IndexMode::Exact`] scans every vector. [`IndexMode::Partitioned`] is an
//! inverted-file index: k-means centroids split the table into partitions
//! and a query scans only the `probes` partitions whose centroids are
//! closest. With `probes == partitions` both modes return the same hits.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{seq::index::sample, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::GraphStore;

pub const KMEANS_ITERATIONS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Euclidean (L2) distance.
    Euclidean,
    /// `1 − cos(u, v)`.
    Cosine,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    Exact,
    Partitioned,
}

impl FromStr for IndexMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(IndexMode::Exact),
            "partitioned" | "ivf" => Ok(IndexMode::Partitioned),
            other => Err(Error::Config(format!("unknown index mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub metric: Metric,
    pub mode: IndexMode,
    pub partitions: usize,
    pub probes: usize,
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Euclidean,
            mode: IndexMode::Exact,
            partitions: 1,
            probes: 1,
            seed: 42,
        }
    }
}

/// One neighbor: id, distance to the query (smaller is closer), label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborHit {
    pub qnode: String,
    pub score: f64,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnIndex {
    metric: Metric,
    mode: IndexMode,
    width: usize,
    ids: Vec<String>,
    /// Row-major; unit-normalized when the metric is cosine.
    vectors: Vec<f64>,
    centroids: Vec<Vec<f64>>,
    partitions: Vec<Vec<u32>>,
    probes: usize,
    #[serde(skip)]
    lookup: HashMap<String, u32>,
}

impl KnnIndex {
    pub fn build(table: &EmbeddingTable, config: &IndexConfig) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Config("cannot index an empty table".into()));
        }
        let n = table.len();
        let width = table.width();
        let mut ids = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * width);
        for (id, v) in table.iter() {
            ids.push(id.to_owned());
            match config.metric {
                Metric::Euclidean => vectors.extend_from_slice(v),
                Metric::Cosine => {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
                    vectors.extend(v.iter().map(|x| x * scale));
                }
            }
        }

        let mut index = Self {
            metric: config.metric,
            mode: config.mode,
            width,
            ids,
            vectors,
            centroids: Vec::new(),
            partitions: Vec::new(),
            probes: 0,
            lookup: HashMap::new(),
        };
        index.reindex();

        if config.mode == IndexMode::Partitioned {
            if config.partitions == 0 || config.partitions > n {
                return Err(Error::Config(format!(
                    "partitions must be in 1..={n}, got {}",
                    config.partitions
                )));
            }
            if config.probes == 0 || config.probes > config.partitions {
                return Err(Error::Config(format!(
                    "probes must be in 1..={}, got {}",
                    config.partitions, config.probes
                )));
            }
            let (centroids, assignment) = kmeans(&index.vectors, width, config.partitions, config.seed);
            let mut partitions = vec![Vec::new(); config.partitions];
            for (row, &c) in assignment.iter().enumerate() {
                partitions[c].push(row as u32);
            }
            index.centroids = centroids;
            index.partitions = partitions;
            index.probes = config.probes;
        }
        Ok(index)
    }

    fn reindex(&mut self) {
        self.lookup = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.lookup.contains_key(id)
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    /// Node ids per partition (empty in exact mode).
    pub fn partitions(&self) -> Vec<Vec<&str>> {
        self.partitions
            .iter()
            .map(|p| p.iter().map(|&i| self.ids[i as usize].as_str()).collect())
            .collect()
    }

    pub fn probes(&self) -> usize {
        self.probes
    }

    fn row(&self, i: u32) -> &[f64] {
        let s = i as usize * self.width;
        &self.vectors[s..s + self.width]
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.metric {
            Metric::Euclidean => squared_l2(a, b).sqrt(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (1.0 - dot).max(0.0)
            }
        }
    }

    /// Up to `k` `(id, distance)` pairs, ascending, excluding `qnode`
    /// itself; ties are broken by id.
    pub fn nearest(&self, qnode: &str, k: usize) -> Result<Vec<(&str, f64)>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let &q = self
            .lookup
            .get(qnode)
            .ok_or_else(|| Error::NotFound(qnode.to_owned()))?;
        let query = self.row(q);

        let mut hits: Vec<(u32, f64)> = match self.mode {
            IndexMode::Exact => (0..self.ids.len() as u32)
                .filter(|&i| i != q)
                .map(|i| (i, self.distance(query, self.row(i))))
                .collect(),
            IndexMode::Partitioned => {
                let mut order: Vec<(usize, f64)> = self
                    .centroids
                    .iter()
                    .enumerate()
                    .map(|(c, centroid)| (c, squared_l2(query, centroid)))
                    .collect();
                order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                order
                    .iter()
                    .take(self.probes)
                    .flat_map(|&(c, _)| self.partitions[c].iter().copied())
                    .filter(|&i| i != q)
                    .map(|i| (i, self.distance(query, self.row(i))))
                    .collect()
            }
        };
        hits.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| self.ids[a.0 as usize].cmp(&self.ids[b.0 as usize]))
        });
        hits.truncate(k);
        Ok(hits
            .into_iter()
            .map(|(i, d)| (self.ids[i as usize].as_str(), d))
            .collect())
    }

    /// [`nearest`](Self::nearest) with labels resolved from the store.
    pub fn nearest_neighbors(&self, qnode: &str, k: usize, store: Option<&GraphStore>) -> Result<Vec<NeighborHit>> {
        Ok(self
            .nearest(qnode, k)?
            .into_iter()
            .map(|(id, score)| NeighborHit {
                qnode: id.to_owned(),
                score,
                label: store.map(|s| s.display_label(id)).unwrap_or_default(),
            })
            .collect())
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("knn index serializes")
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<Self> {
        let mut index: Self = serde_json::from_slice(bytes)?;
        index.reindex();
        Ok(index)
    }
}

fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid by squared distance; ties go to the lower index.
fn assign(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_l2(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's k-means with seeded initial centroids drawn without replacement.
/// Empty clusters are re-seeded from the point farthest from its centroid.
fn kmeans(data: &[f64], width: usize, k: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = data.len() / width;
    let point = |i: usize| &data[i * width..(i + 1) * width];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = sample(&mut rng, n, k).into_iter().map(|i| point(i).to_vec()).collect();
    let mut assignment = vec![0usize; n];
    let mut dist = vec![0.0; n];

    for _ in 0..KMEANS_ITERATIONS {
        for i in 0..n {
            (assignment[i], dist[i]) = assign(point(i), &centroids);
        }
        let mut sums = vec![vec![0.0; width]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignment[i]] += 1;
            for (s, x) in sums[assignment[i]].iter_mut().zip(point(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s * inv).collect();
            } else {
                let far = (0..n)
                    .fold(0, |best, i| if dist[i] > dist[best] { i } else { best });
                centroids[c] = point(far).to_vec();
                dist[far] = f64::NEG_INFINITY;
            }
        }
    }
    for (i, slot) in assignment.iter_mut().enumerate() {
        *slot = assign(point(i), &centroids).0;
    }
    (centroids, assignment)
}
