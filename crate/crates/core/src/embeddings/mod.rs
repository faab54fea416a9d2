//! Node embedding tables, trainers and cosine similarity.
//!
//! TransE and ComplEx tables are trained here from the graph's structural
//! edges; text tables are produced elsewhere and loaded from vector files
//! (or computed by a [`text::VectorProvider`] over lexicalized nodes).
//! Pairwise similarity is always cosine over the stored real layout, which
//! for ComplEx is `[re_0..re_{d-1}, im_0..im_{d-1}]`.

pub mod complex;
pub mod eval;
pub mod lexicalize;
pub mod text;
pub mod train;
pub mod transe;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lexicalize::lexicalize;
pub use train::{Norm, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Transe,
    Complex,
    Text,
}

impl EmbeddingKind {
    pub const ALL: [EmbeddingKind; 3] = [Self::Transe, Self::Complex, Self::Text];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Transe => "transe",
            Self::Complex => "complex",
            Self::Text => "text",
        }
    }

    /// Reals stored per vector for a given dimension.
    pub fn storage_len(self, dim: usize) -> usize {
        match self {
            Self::Complex => 2 * dim,
            _ => dim,
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmbeddingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transe" => Ok(Self::Transe),
            "complex" => Ok(Self::Complex),
            "text" => Ok(Self::Text),
            other => Err(Error::Config(format!("unknown embedding kind {other:?}"))),
        }
    }
}

/// Node id → dense vector, plus relation vectors for trained models.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    kind: EmbeddingKind,
    dim: usize,
    nodes: IndexMap<String, Vec<f64>>,
    relations: IndexMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(kind: EmbeddingKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            nodes: IndexMap::new(),
            relations: IndexMap::new(),
        }
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    /// Embedding dimension; complex components for ComplEx tables.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of reals per stored vector.
    pub fn width(&self) -> usize {
        self.kind.storage_len(self.dim)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.nodes.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn relation(&self, id: &str) -> Option<&[f64]> {
        self.relations.get(id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.nodes.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        self.check_width(&id, &vector)?;
        if self.nodes.contains_key(&id) {
            return Err(Error::Config(format!("duplicate node id {id:?}")));
        }
        self.nodes.insert(id, vector);
        Ok(())
    }

    pub fn insert_relation(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        self.check_width(&id, &vector)?;
        self.relations.insert(id, vector);
        Ok(())
    }

    fn check_width(&self, id: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.width() {
            return Err(Error::Config(format!(
                "vector for {id:?} has {} values, table expects {}",
                vector.len(),
                self.width()
            )));
        }
        Ok(())
    }

    /// Cosine similarity of two node vectors.
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        let u = self.get(a).ok_or_else(|| Error::NotFound(a.to_owned()))?;
        let v = self.get(b).ok_or_else(|| Error::NotFound(b.to_owned()))?;
        cosine(u, v).map_err(|zero| Error::UndefinedSimilarity(if zero == 0 { a } else { b }.to_owned()))
    }

    /// Load a vector file. Width is taken from the first line; for ComplEx
    /// tables it must be even.
    pub fn read_vectors(path: impl AsRef<Path>, kind: EmbeddingKind) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = Self::new(kind, 0);
        read_rows(BufReader::new(file), kind, |id, v, _| {
            if table.dim == 0 {
                table.dim = if kind == EmbeddingKind::Complex { v.len() / 2 } else { v.len() };
            }
            table.nodes.insert(id, v);
        })
        .map_err(|e| relocate(e, path))?;
        Ok(table)
    }

    pub fn from_reader(reader: impl BufRead, kind: EmbeddingKind) -> Result<Self> {
        let mut table = Self::new(kind, 0);
        read_rows(reader, kind, |id, v, _| {
            if table.dim == 0 {
                table.dim = if kind == EmbeddingKind::Complex { v.len() / 2 } else { v.len() };
            }
            table.nodes.insert(id, v);
        })?;
        Ok(table)
    }

    /// Load relation vectors into an existing table.
    pub fn read_relations(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let width = self.width();
        let mut rows = Vec::new();
        read_rows(BufReader::new(file), self.kind, |id, v, line| rows.push((id, v, line)))
            .map_err(|e| relocate(e, path))?;
        for (id, v, line) in rows {
            if v.len() != width {
                return Err(relocate(
                    Error::parse(line, format!("expected {width} values, found {}", v.len())),
                    path,
                ));
            }
            self.relations.insert(id, v);
        }
        Ok(())
    }

    pub fn write_vectors(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), |w| write_rows(w, self.iter()))
    }

    pub fn write_relations(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), |w| write_rows(w, self.relations()))
    }

    pub fn write_vectors_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        write_rows(w, self.iter())
    }
}

/// Cosine of two equal-length vectors; `Err(i)` names the zero vector.
pub fn cosine(u: &[f64], v: &[f64]) -> std::result::Result<f64, usize> {
    debug_assert_eq!(u.len(), v.len());
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (x, y) in u.iter().zip(v) {
        dot += x * y;
        nu += x * x;
        nv += y * y;
    }
    if nu == 0.0 {
        return Err(0);
    }
    if nv == 0.0 {
        return Err(1);
    }
    // sqrt(nu * nv) is exact when u == v, so self-similarity is exactly 1
    let product = nu * nv;
    let denom = if product.is_normal() { product.sqrt() } else { nu.sqrt() * nv.sqrt() };
    Ok((dot / denom).clamp(-1.0, 1.0))
}

fn relocate(err: Error, path: &Path) -> Error {
    match err {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

fn read_rows(
    reader: impl BufRead,
    kind: EmbeddingKind,
    mut sink: impl FnMut(String, Vec<f64>, usize),
) -> Result<()> {
    let mut width = None;
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<vector stream>", e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let id = cols.next().unwrap_or_default();
        if id.is_empty() {
            return Err(Error::parse(lineno, "missing node id"));
        }
        let values = cols
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(lineno, format!("bad float {c:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::parse(lineno, format!("no values for {id:?}")));
        }
        match width {
            None => {
                if kind == EmbeddingKind::Complex && values.len() % 2 != 0 {
                    return Err(Error::parse(
                        lineno,
                        format!("complex vectors need an even number of reals, found {}", values.len()),
                    ));
                }
                width = Some(values.len());
            }
            Some(w) if w != values.len() => {
                return Err(Error::parse(
                    lineno,
                    format!("dimension mismatch: expected {w} values, found {}", values.len()),
                ));
            }
            _ => {}
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::parse(lineno, format!("duplicate node id {id:?}")));
        }
        sink(id.to_owned(), values, lineno);
    }
    Ok(())
}

fn write_rows<'a>(
    w: &mut impl Write,
    rows: impl Iterator<Item = (&'a str, &'a [f64])>,
) -> std::io::Result<()> {
    for (id, v) in rows {
        w.write_all(id.as_bytes())?;
        for x in v {
            // 17 significant digits round-trip every f64
            write!(w, "\t{x:.16e}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
