use std::path::PathBuf;

use kgsim_core::artifacts::Layout;
use kgsim_core::embeddings::transe;
use kgsim_core::{Algorithm, EmbeddingKind, Metric, TrainConfig};
use kgsim_service::{ServiceConfig, PORT_ENV};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/mini_vehicles.tsv");

#[test]
fn defaults_and_overrides() {
    let config = ServiceConfig::from_toml("").unwrap();
    assert_eq!(config, ServiceConfig::default());
    assert_eq!(config.port, 8080);
    assert_eq!(config.default_k, 10);
    assert_eq!(config.neighbors_table, EmbeddingKind::Complex);

    let config = ServiceConfig::from_toml(
        r#"
        bind = "0.0.0.0"
        port = 9000
        graph = "g.tsv"
        algorithms = ["class", "text"]
        neighbors_table = "transe"
        metric = "cosine"
        index_mode = "partitioned"
        partitions = 4
        probes = 2
        subclass_prop = "sub"
        "#,
    )
    .unwrap();
    assert_eq!(config.addr().to_string(), "0.0.0.0:9000");
    assert_eq!(config.algorithms, [Algorithm::Class, Algorithm::Text]);
    assert_eq!(config.metric, Metric::Cosine);
    assert_eq!(config.index_config().partitions, 4);
    assert_eq!(config.taxonomy_config().subclass_property, "sub");
    assert_eq!(config.taxonomy_config().instance_property, "P31");
}

#[test]
fn rejects_bad_files() {
    assert!(ServiceConfig::from_toml("colour = \"blue\"").is_err());
    assert!(ServiceConfig::from_toml("port = \"eighty\"").is_err());
    assert!(ServiceConfig::from_toml("algorithms = [\"bert\"]").is_err());

    let graph = Some(PathBuf::from(FIXTURE));
    for port in [0, 65536, 100_000] {
        let config = ServiceConfig { port, graph: graph.clone(), ..Default::default() };
        assert!(config.validate().is_err(), "port {port}");
    }
    for port in [1, 80, 65535] {
        let config = ServiceConfig { port, graph: graph.clone(), ..Default::default() };
        assert!(config.validate().is_ok(), "port {port}");
    }
    assert!(ServiceConfig::default().validate().is_err());
    let config = ServiceConfig { default_k: 0, graph, ..Default::default() };
    assert!(config.validate().is_err());
}

#[test]
fn port_environment_override() {
    // the only test in this binary that touches the environment
    let mut config = ServiceConfig::default();
    std::env::set_var(PORT_ENV, "7001");
    config.apply_env().unwrap();
    assert_eq!(config.port, 7001);
    std::env::set_var(PORT_ENV, "http");
    assert!(config.apply_env().is_err());
    std::env::remove_var(PORT_ENV);
    config.apply_env().unwrap();
    assert_eq!(config.port, 7001);
}

#[test]
fn loads_engine_from_file_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(FIXTURE, dir.path().join("graph.tsv")).unwrap();

    let layout = Layout::new(dir.path().join("out"));
    layout.create().unwrap();
    let mut store = kgsim_core::GraphStore::new();
    store.ingest_edges(FIXTURE).unwrap();
    let (table, _) = transe::train_transe(&store, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
    layout.save_table(&table).unwrap();

    let text = dir.path().join("text.tsv");
    std::fs::write(&text, "Q_bus\t1\t0\nQ_motorcycle\t1\t1\n").unwrap();
    std::fs::write(
        dir.path().join("kgsim.toml"),
        "graph = \"graph.tsv\"\nartifacts = \"out\"\ntext_vectors = \"text.tsv\"\nneighbors_table = \"transe\"\n",
    )
    .unwrap();

    let config = ServiceConfig::load(dir.path().join("kgsim.toml")).unwrap();
    assert_eq!(config.graph.as_deref(), Some(dir.path().join("graph.tsv").as_path()));
    let engine = config.load_engine().unwrap();
    assert!(engine.table(EmbeddingKind::Transe).is_some());
    assert!(engine.table(EmbeddingKind::Complex).is_none());
    assert_eq!(engine.table(EmbeddingKind::Text).unwrap().len(), 2);
    assert_eq!(engine.neighbors("Q_bus", 3, None).unwrap().len(), 3);
    let cos = engine.table(EmbeddingKind::Text).unwrap().cosine("Q_bus", "Q_motorcycle").unwrap();
    assert!((cos - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

    assert!(ServiceConfig::load(dir.path().join("missing.toml")).is_err());
}

#[test]
fn example_config_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/kgsim.example.toml");
    let config = ServiceConfig::load(path).unwrap();
    assert!(config.graph.unwrap().ends_with("out/graph.tsv"));
    assert_eq!(config.algorithms, Algorithm::ALL);
}
