//! Edge-list graph store.
//!
//! Graphs arrive as tab-separated `node1 / label / node2` files where the
//! middle column holds the property id. Labels, aliases and descriptions are
//! ordinary edges with the properties [`LABEL`], [`ALIAS`] and
//! [`DESCRIPTION`]; they populate [`NodeMeta`] and the token index used by
//! [`GraphStore::search_labels`].
//!
//! The store is filled by a single writer and then shared read-only
//! (typically behind an `Arc`).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EDGE_FILE_HEADER: &str = "node1\tlabel\tnode2";

pub const LABEL: &str = "label";
pub const ALIAS: &str = "alias";
pub const DESCRIPTION: &str = "description";

/// One `(node1, property, node2)` statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub node1: String,
    pub property: String,
    pub node2: String,
    /// `node2` was a quoted literal (or a metadata value) rather than a node id.
    pub literal: bool,
}

impl EdgeRecord {
    pub fn new(node1: impl Into<String>, property: impl Into<String>, node2: impl Into<String>) -> Self {
        Self {
            node1: node1.into(),
            property: property.into(),
            node2: node2.into(),
            literal: false,
        }
    }

    pub fn with_literal(
        node1: impl Into<String>,
        property: impl Into<String>,
        value: impl Into<String>,
    ) -> Self {
        Self {
            literal: true,
            ..Self::new(node1, property, value)
        }
    }

    pub fn is_metadata(&self) -> bool {
        is_metadata_property(&self.property)
    }

    /// True for edges that connect two graph nodes.
    pub fn is_structural(&self) -> bool {
        !self.literal && !self.is_metadata()
    }

    pub fn as_tuple(&self) -> (&str, &str, &str) {
        (&self.node1, &self.property, &self.node2)
    }
}

pub fn is_metadata_property(property: &str) -> bool {
    matches!(property, LABEL | ALIAS | DESCRIPTION)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub id: String,
    pub label: Option<String>,
    pub aliases: Vec<String>,
    pub description: Option<String>,
}

impl NodeMeta {
    fn new(id: &str) -> Self {
        Self {
            id: id.to_owned(),
            ..Default::default()
        }
    }

    fn searchable(&self) -> impl Iterator<Item = &str> {
        self.label
            .as_deref()
            .into_iter()
            .chain(self.aliases.iter().map(String::as_str))
    }
}

/// A ranked label search result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelMatch {
    pub id: String,
    pub label: String,
    /// Number of query tokens that matched a label token exactly.
    pub score: u32,
}

#[derive(Debug, Default)]
pub struct GraphStore {
    edges: Vec<EdgeRecord>,
    by_subject: HashMap<String, Vec<usize>>,
    meta: BTreeMap<String, NodeMeta>,
    /// Ids that appear on either end of a structural edge.
    nodes: BTreeSet<String>,
    tokens: BTreeMap<String, BTreeSet<String>>,
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = EdgeRecord>) -> Self {
        let mut store = Self::new();
        for edge in edges {
            store.push_edge(edge);
        }
        store
    }

    /// Load an edge file, returning the number of edges added.
    pub fn ingest_edges(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        self.ingest_reader(BufReader::new(file))
            .map_err(|e| match e {
                Error::Io { source, .. } => Error::io(path, source),
                other => other,
            })
    }

    pub fn ingest_reader(&mut self, reader: impl BufRead) -> Result<usize> {
        let mut seen_header = false;
        let mut parsed = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io("<edge stream>", e))?;
            let line = line.trim_end_matches('\r');
            if !seen_header {
                if line.is_empty() {
                    continue;
                }
                if line != EDGE_FILE_HEADER {
                    return Err(Error::parse(
                        lineno,
                        format!("expected header {EDGE_FILE_HEADER:?}, found {line:?}"),
                    ));
                }
                seen_header = true;
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            parsed.push(parse_row(lineno, line)?);
        }
        // all-or-nothing: a malformed row leaves the store untouched
        let count = parsed.len();
        for edge in parsed {
            self.push_edge(edge);
        }
        Ok(count)
    }

    pub fn push_edge(&mut self, edge: EdgeRecord) {
        let offset = self.edges.len();
        self.by_subject
            .entry(edge.node1.clone())
            .or_default()
            .push(offset);

        if edge.is_metadata() {
            self.apply_metadata(&edge);
        } else if !edge.literal {
            self.nodes.insert(edge.node1.clone());
            self.nodes.insert(edge.node2.clone());
        } else {
            self.nodes.insert(edge.node1.clone());
        }
        self.edges.push(edge);
    }

    fn apply_metadata(&mut self, edge: &EdgeRecord) {
        let meta = self
            .meta
            .entry(edge.node1.clone())
            .or_insert_with(|| NodeMeta::new(&edge.node1));
        let value = edge.node2.clone();
        let indexed = match edge.property.as_str() {
            LABEL => {
                meta.label = Some(value.clone());
                Some(value)
            }
            ALIAS => {
                let folded = value.to_lowercase();
                if meta.aliases.iter().any(|a| a.to_lowercase() == folded) {
                    None
                } else {
                    meta.aliases.push(value.clone());
                    Some(value)
                }
            }
            _ => {
                meta.description = Some(value);
                None
            }
        };
        if let Some(text) = indexed {
            for token in tokenize(&text) {
                self.tokens
                    .entry(token)
                    .or_default()
                    .insert(edge.node1.clone());
            }
        }
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn meta_count(&self) -> usize {
        self.meta.len()
    }

    pub fn meta(&self, id: &str) -> Option<&NodeMeta> {
        self.meta.get(id)
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.meta.get(id).and_then(|m| m.label.as_deref())
    }

    /// Label or the empty string.
    pub fn display_label(&self, id: &str) -> String {
        self.label(id).unwrap_or_default().to_owned()
    }

    pub fn description(&self, id: &str) -> Option<&str> {
        self.meta.get(id).and_then(|m| m.description.as_deref())
    }

    /// Graph nodes in id order (ids touched by a non-metadata edge).
    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Whether the id is known at all, as a graph node or through metadata.
    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains(id) || self.meta.contains_key(id)
    }

    /// Edges with `node1 == node`, in ingestion order.
    pub fn outgoing_edges(&self, node: &str) -> Vec<&EdgeRecord> {
        self.by_subject
            .get(node)
            .map(|offsets| offsets.iter().map(|&i| &self.edges[i]).collect())
            .unwrap_or_default()
    }

    /// Structural edges only, in ingestion order.
    pub fn structural_edges(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.iter().filter(|e| e.is_structural())
    }

    /// Prefix search over labels and aliases.
    ///
    /// A node matches when one of its label/alias strings has, for every
    /// query token, some token starting with it. Results are ordered by exact
    /// token matches (desc), label length (asc; shortest alias for unlabeled
    /// nodes), then id.
    pub fn search_labels(&self, query: &str, limit: usize) -> Vec<LabelMatch> {
        let query_tokens = tokenize(query);
        if query_tokens.is_empty() || limit == 0 {
            return Vec::new();
        }

        let mut candidates: Option<BTreeSet<&str>> = None;
        for token in &query_tokens {
            let hits: BTreeSet<&str> = self
                .tokens
                .range::<str, _>((std::ops::Bound::Included(token.as_str()), std::ops::Bound::Unbounded))
                .take_while(|(t, _)| t.starts_with(token.as_str()))
                .flat_map(|(_, ids)| ids.iter().map(String::as_str))
                .collect();
            candidates = Some(match candidates {
                None => hits,
                Some(prev) => prev.intersection(&hits).copied().collect(),
            });
        }

        let mut ranked: Vec<(u32, usize, &str, &NodeMeta)> = candidates
            .unwrap_or_default()
            .into_iter()
            .filter_map(|id| {
                let meta = self.meta.get(id)?;
                let exact = meta
                    .searchable()
                    .filter_map(|text| match_string(&query_tokens, text))
                    .max()?;
                let len = match &meta.label {
                    Some(label) => label.chars().count(),
                    None => meta.aliases.iter().map(|a| a.chars().count()).min().unwrap_or(0),
                };
                Some((exact, len, id, meta))
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(b.2)));

        ranked
            .into_iter()
            .take(limit)
            .map(|(score, _, id, meta)| LabelMatch {
                id: id.to_owned(),
                label: meta.label.clone().unwrap_or_default(),
                score,
            })
            .collect()
    }
}

/// Exact-match count if every query token prefixes a token of `text`.
fn match_string(query: &[String], text: &str) -> Option<u32> {
    let tokens = tokenize(text);
    let mut exact = 0;
    for q in query {
        if !tokens.iter().any(|t| t.starts_with(q.as_str())) {
            return None;
        }
        if tokens.iter().any(|t| t == q) {
            exact += 1;
        }
    }
    Some(exact)
}

/// Case-folded tokens split on whitespace and punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn parse_row(line: usize, row: &str) -> Result<EdgeRecord> {
    let cols: Vec<&str> = row.split('\t').collect();
    if cols.len() != 3 {
        return Err(Error::parse(
            line,
            format!("expected 3 tab-separated columns, found {}", cols.len()),
        ));
    }
    let (node1, property, raw) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
    if node1.is_empty() || property.is_empty() {
        return Err(Error::parse(line, "node1 and label columns must be non-empty"));
    }
    let (node2, quoted) = strip_literal(raw);
    if node2.is_empty() {
        return Err(Error::parse(line, "node2 column must be non-empty"));
    }
    let literal = quoted || is_metadata_property(property);
    Ok(EdgeRecord {
        node1: node1.to_owned(),
        property: property.to_owned(),
        node2: node2.to_owned(),
        literal,
    })
}

/// Strip `"..."` quotes or a `'...'@lang` string literal.
fn strip_literal(raw: &str) -> (&str, bool) {
    if raw.len() >= 2 && raw.starts_with('"') && raw.ends_with('"') {
        return (&raw[1..raw.len() - 1], true);
    }
    if raw.starts_with('\'') {
        if let Some(end) = raw.rfind("'@") {
            if end > 0 {
                return (&raw[1..end], true);
            }
        }
        if raw.len() >= 2 && raw.ends_with('\'') {
            return (&raw[1..raw.len() - 1], true);
        }
    }
    (raw, false)
}
