use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use kgsim_core::artifacts::Layout;
use kgsim_core::{
    Algorithm, EmbeddingKind, EmbeddingTable, Engine, GraphStore, IndexConfig, IndexMode, KnnIndex, Metric,
    TaxonomyConfig, TaxonomyIndex,
};
use serde::Deserialize;

/// Environment variable that overrides the configured port.
pub const PORT_ENV: &str = "KGSIM_PORT";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] kgsim_core::Error),
}

/// Service settings, read from a flat TOML file.
///
/// ```toml
/// bind = "127.0.0.1"
/// port = 8080
/// graph = "mini_vehicles.tsv"
/// artifacts = "out"
/// text_vectors = "bert.tsv"
/// default_k = 10
/// algorithms = ["class", "transe", "complex", "text"]
/// neighbors_table = "complex"
/// metric = "euclidean"
/// ```
///
/// Relative paths are resolved against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: IpAddr,
    pub port: u32,
    pub graph: Option<PathBuf>,
    /// Directory written by the CLI (taxonomy, tables, indices).
    pub artifacts: Option<PathBuf>,
    pub transe_vectors: Option<PathBuf>,
    pub complex_vectors: Option<PathBuf>,
    pub text_vectors: Option<PathBuf>,
    pub default_k: usize,
    pub algorithms: Vec<Algorithm>,
    pub neighbors_table: EmbeddingKind,
    pub metric: Metric,
    pub index_mode: IndexMode,
    pub partitions: usize,
    pub probes: usize,
    pub seed: u64,
    pub subclass_prop: String,
    pub instance_prop: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let taxonomy = TaxonomyConfig::default();
        let index = IndexConfig::default();
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            graph: None,
            artifacts: None,
            transe_vectors: None,
            complex_vectors: None,
            text_vectors: None,
            default_k: 10,
            algorithms: Algorithm::ALL.to_vec(),
            neighbors_table: EmbeddingKind::Complex,
            metric: index.metric,
            index_mode: index.mode,
            partitions: index.partitions,
            probes: index.probes,
            seed: index.seed,
            subclass_prop: taxonomy.subclass_property,
            instance_prop: taxonomy.instance_property,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::from_toml(&text).map_err(|source| ConfigError::Toml {
            path: path.to_owned(),
            source,
        })?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.graph,
            &mut self.artifacts,
            &mut self.transe_vectors,
            &mut self.complex_vectors,
            &mut self.text_vectors,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Apply the `KGSIM_PORT` override if it is set.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(value) = std::env::var(PORT_ENV) {
            self.port = value
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("{PORT_ENV}={value:?} is not a port number")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=65535).contains(&self.port) {
            return Err(ConfigError::Invalid(format!("port {} outside 1..=65535", self.port)));
        }
        if self.default_k == 0 {
            return Err(ConfigError::Invalid("default_k must be at least 1".into()));
        }
        if self.graph.is_none() {
            return Err(ConfigError::Invalid("no graph file configured".into()));
        }
        self.taxonomy_config().validate()?;
        Ok(())
    }

    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port as u16)
    }

    pub fn taxonomy_config(&self) -> TaxonomyConfig {
        TaxonomyConfig {
            subclass_property: self.subclass_prop.clone(),
            instance_property: self.instance_prop.clone(),
        }
    }

    pub fn index_config(&self) -> IndexConfig {
        IndexConfig {
            metric: self.metric,
            mode: self.index_mode,
            partitions: self.partitions,
            probes: self.probes,
            seed: self.seed,
        }
    }

    /// Load the graph and every configured artifact. Explicit vector files
    /// replace tables found in the artifacts directory.
    pub fn load_engine(&self) -> Result<Engine, ConfigError> {
        self.validate()?;
        let graph = self.graph.as_ref().expect("validated");
        let index_config = self.index_config();
        let mut engine = match &self.artifacts {
            Some(dir) => Layout::new(dir).load_engine(graph, &self.taxonomy_config(), &index_config)?,
            None => {
                let mut store = GraphStore::new();
                store.ingest_edges(graph)?;
                let taxonomy = TaxonomyIndex::build(&store, &self.taxonomy_config())?;
                Engine::new(store, taxonomy)
            }
        };
        for (kind, path) in [
            (EmbeddingKind::Transe, &self.transe_vectors),
            (EmbeddingKind::Complex, &self.complex_vectors),
            (EmbeddingKind::Text, &self.text_vectors),
        ] {
            if let Some(path) = path {
                let table = EmbeddingTable::read_vectors(path, kind)?;
                engine.add_index(kind, KnnIndex::build(&table, &index_config)?);
                engine.add_table(table);
            }
        }
        engine.set_algorithms(self.algorithms.clone());
        engine.set_neighbors_table(self.neighbors_table);
        Ok(engine)
    }
}
