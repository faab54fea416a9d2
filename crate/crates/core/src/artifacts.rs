//! On-disk layout of pipeline artifacts.
//!
//! ```text
//! <dir>/graph.tsv               copy of the ingested edge file
//! <dir>/taxonomy.json            taxonomy index
//! <dir>/<kind>.tsv               node vectors (vector file format)
//! <dir>/<kind>.relations.tsv     relation vectors, trained models only
//! <dir>/<kind>.loss.tsv          per-epoch mean loss
//! <dir>/index.<kind>.json        nearest-neighbor index
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::embeddings::{EmbeddingKind, EmbeddingTable, TrainReport};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::graph::GraphStore;
use crate::knn::{IndexConfig, KnnIndex};
use crate::taxonomy::{TaxonomyConfig, TaxonomyIndex};

#[derive(Debug, Clone)]
pub struct Layout {
    dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn create(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))
    }

    pub fn graph(&self) -> PathBuf {
        self.dir.join("graph.tsv")
    }

    pub fn taxonomy(&self) -> PathBuf {
        self.dir.join("taxonomy.json")
    }

    pub fn vectors(&self, kind: EmbeddingKind) -> PathBuf {
        self.dir.join(format!("{kind}.tsv"))
    }

    pub fn relations(&self, kind: EmbeddingKind) -> PathBuf {
        self.dir.join(format!("{kind}.relations.tsv"))
    }

    pub fn losses(&self, kind: EmbeddingKind) -> PathBuf {
        self.dir.join(format!("{kind}.loss.tsv"))
    }

    pub fn index(&self, kind: EmbeddingKind) -> PathBuf {
        self.dir.join(format!("index.{kind}.json"))
    }

    pub fn save_taxonomy(&self, taxonomy: &TaxonomyIndex) -> Result<()> {
        write(&self.taxonomy(), &taxonomy.to_json())
    }

    pub fn load_taxonomy(&self) -> Result<Option<TaxonomyIndex>> {
        let path = self.taxonomy();
        read_optional(&path)?
            .map(|bytes| TaxonomyIndex::from_json(&bytes).map_err(|e| corrupt(&path, e)))
            .transpose()
    }

    pub fn save_table(&self, table: &EmbeddingTable) -> Result<()> {
        table.write_vectors(self.vectors(table.kind()))?;
        if table.relations().next().is_some() {
            table.write_relations(self.relations(table.kind()))?;
        }
        Ok(())
    }

    pub fn load_table(&self, kind: EmbeddingKind) -> Result<Option<EmbeddingTable>> {
        let path = self.vectors(kind);
        if !path.exists() {
            return Ok(None);
        }
        let mut table = EmbeddingTable::read_vectors(&path, kind)?;
        let relations = self.relations(kind);
        if relations.exists() {
            table.read_relations(relations)?;
        }
        Ok(Some(table))
    }

    pub fn save_losses(&self, kind: EmbeddingKind, report: &TrainReport) -> Result<()> {
        let body: String = report
            .epoch_losses
            .iter()
            .enumerate()
            .map(|(epoch, loss)| format!("{epoch}\t{loss:.16e}\n"))
            .collect();
        write(&self.losses(kind), body.as_bytes())
    }

    pub fn save_index(&self, kind: EmbeddingKind, index: &KnnIndex) -> Result<()> {
        write(&self.index(kind), &index.to_json())
    }

    pub fn load_index(&self, kind: EmbeddingKind) -> Result<Option<KnnIndex>> {
        let path = self.index(kind);
        read_optional(&path)?
            .map(|bytes| KnnIndex::from_json(&bytes).map_err(|e| corrupt(&path, e)))
            .transpose()
    }

    /// Assemble an engine from a graph file plus whatever artifacts exist.
    /// A missing taxonomy is rebuilt; tables without a saved index get an
    /// index built with `index_config`.
    pub fn load_engine(
        &self,
        graph: impl AsRef<Path>,
        taxonomy_config: &TaxonomyConfig,
        index_config: &IndexConfig,
    ) -> Result<Engine> {
        let mut store = GraphStore::new();
        store.ingest_edges(graph)?;
        let taxonomy = match self.load_taxonomy()? {
            Some(t) if t.config() == taxonomy_config => t,
            _ => TaxonomyIndex::build(&store, taxonomy_config)?,
        };
        let mut engine = Engine::new(store, taxonomy);
        for kind in EmbeddingKind::ALL {
            let Some(table) = self.load_table(kind)? else {
                continue;
            };
            let index = match self.load_index(kind)? {
                Some(index) => index,
                None => KnnIndex::build(&table, index_config)?,
            };
            engine.add_index(kind, index);
            engine.add_table(table);
        }
        Ok(engine)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(bytes)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn corrupt(path: &Path, err: serde_json::Error) -> Error {
    Error::Artifact {
        path: path.to_owned(),
        message: err.to_string(),
    }
}
