use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use kgsim_core::artifacts::Layout;
use kgsim_core::embeddings::eval::{tail_prediction, TripleModel};
use kgsim_core::embeddings::text::{text_table, HashedBagProvider};
use kgsim_core::embeddings::{complex, lexicalize, transe};
use kgsim_core::{
    EmbeddingKind, EmbeddingTable, Engine, GraphStore, IndexConfig, KnnIndex, TaxonomyConfig, TaxonomyIndex,
    TrainConfig,
};
use kgsim_service::ServiceConfig;

use crate::{Command, Common, Format, Model, TrainArgs};

pub fn run(command: Command, out: &mut impl Write) -> Result<()> {
    match command {
        Command::Ingest { common } => ingest(&common, out),
        Command::BuildTaxonomy { common } => build_taxonomy(&common, out),
        Command::Train(args) => train(&args, out),
        Command::Lexicalize(args) => {
            let layout = Layout::new(&args.common.out);
            let store = load_store(&args.common)?;
            let nodes: Vec<&str> = if args.nodes.is_empty() {
                store.nodes().collect()
            } else {
                args.nodes.iter().map(String::as_str).collect()
            };
            for node in nodes {
                writeln!(out, "{node}\t{}", lexicalize(&store, node))?;
            }
            if args.write_vectors {
                let table = text_table(&store, &HashedBagProvider::new(args.text_dim)?)?;
                layout.create()?;
                layout.save_table(&table)?;
            }
            Ok(())
        }
        Command::IngestVectors(args) => {
            let table = EmbeddingTable::read_vectors(&args.file, args.kind)?;
            let layout = Layout::new(&args.out);
            layout.create()?;
            layout.save_table(&table)?;
            writeln!(out, "kind\t{}\nnodes\t{}\ndim\t{}", table.kind(), table.len(), table.dim())?;
            Ok(())
        }
        Command::BuildIndex(args) => {
            let layout = Layout::new(&args.out);
            let config = IndexConfig {
                metric: args.metric,
                mode: args.mode,
                partitions: args.partitions,
                probes: args.probes,
                seed: args.seed,
            };
            let kinds: Vec<EmbeddingKind> = match args.table {
                Some(kind) => vec![kind],
                None => EmbeddingKind::ALL.to_vec(),
            };
            let mut built = 0;
            for kind in kinds {
                let Some(table) = layout.load_table(kind)? else {
                    if args.table.is_some() {
                        bail!("no {kind} table in {}", layout.dir().display());
                    }
                    continue;
                };
                let index = KnnIndex::build(&table, &config)?;
                layout.save_index(kind, &index)?;
                writeln!(out, "{kind}\t{}\t{}", index.len(), index.centroids().len().max(1))?;
                built += 1;
            }
            if built == 0 {
                bail!("no embedding tables in {}", layout.dir().display());
            }
            Ok(())
        }
        Command::Similarity(args) => {
            let engine = load_engine(&args.common)?;
            let secondaries: Vec<&str> = args.q2.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
            let reports = engine.compare(&args.q1, &secondaries, args.explain)?;
            match args.output.format() {
                Format::Json => writeln!(out, "{}", serde_json::to_string(&reports)?)?,
                Format::Tsv => {
                    for report in &reports {
                        write!(out, "{}\t{}", report.qnode1, report.qnode2)?;
                        for (alg, score) in &report.scores {
                            match score {
                                Some(s) => write!(out, "\t{alg}={s:?}")?,
                                None => write!(out, "\t{alg}=null")?,
                            }
                        }
                        if let Some(parents) = &report.shared_parents {
                            let ids: Vec<&str> = parents.iter().map(|p| p.qnode.as_str()).collect();
                            write!(out, "\tshared={}", ids.join(","))?;
                        }
                        writeln!(out)?;
                    }
                }
            }
            Ok(())
        }
        Command::Neighbors(args) => {
            let engine = load_engine(&args.common)?;
            let hits = engine.neighbors(&args.qnode, args.k as usize, args.table)?;
            match args.output.format() {
                // same bytes as the /nearest-neighbors body
                Format::Json => writeln!(out, "{}", serde_json::to_string(&hits)?)?,
                Format::Tsv => {
                    for hit in &hits {
                        writeln!(out, "{}\t{:?}\t{}", hit.qnode, hit.score, hit.label)?;
                    }
                }
            }
            Ok(())
        }
        Command::Search(args) => {
            let store = load_store(&args.common)?;
            let taxonomy = TaxonomyIndex::build(&store, &taxonomy_config(&args.common))?;
            let hits = Engine::new(store, taxonomy).search(&args.q, args.limit as usize);
            match args.output.format() {
                Format::Json => writeln!(out, "{}", serde_json::to_string(&hits)?)?,
                Format::Tsv => {
                    for hit in &hits {
                        writeln!(out, "{}\t{}\t{}", hit.qnode, hit.label, hit.description)?;
                    }
                }
            }
            Ok(())
        }
        Command::Serve(args) => {
            let mut config = match &args.config {
                Some(path) => ServiceConfig::load(path)?,
                None => ServiceConfig::default(),
            };
            config.apply_env()?;
            if let Some(port) = args.port {
                config.port = port;
            }
            if let Some(out) = args.out {
                config.artifacts = Some(out);
            }
            if let Some(graph) = args.graph {
                config.graph = Some(graph);
            } else if config.graph.is_none() {
                config.graph = config.artifacts.as_ref().map(|dir| Layout::new(dir).graph());
            }
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .with_writer(std::io::stderr)
                .init();
            let runtime = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
            runtime.block_on(kgsim_service::serve(config))?;
            Ok(())
        }
    }
}

fn taxonomy_config(common: &Common) -> TaxonomyConfig {
    TaxonomyConfig {
        subclass_property: common.subclass_prop.clone(),
        instance_property: common.instance_prop.clone(),
    }
}

fn graph_path(common: &Common) -> Result<PathBuf> {
    if let Some(graph) = &common.graph {
        return Ok(graph.clone());
    }
    let copy = Layout::new(&common.out).graph();
    if !copy.exists() {
        bail!("no graph: pass --graph or run `kgsim ingest` first");
    }
    Ok(copy)
}

fn load_store(common: &Common) -> Result<GraphStore> {
    let mut store = GraphStore::new();
    store.ingest_edges(graph_path(common)?)?;
    Ok(store)
}

fn load_engine(common: &Common) -> Result<Engine> {
    let layout = Layout::new(&common.out);
    Ok(layout.load_engine(graph_path(common)?, &taxonomy_config(common), &IndexConfig::default())?)
}

fn ingest(common: &Common, out: &mut impl Write) -> Result<()> {
    let Some(graph) = &common.graph else {
        bail!("ingest needs --graph");
    };
    let mut store = GraphStore::new();
    let edges = store.ingest_edges(graph)?;
    let layout = Layout::new(&common.out);
    layout.create()?;
    if std::fs::canonicalize(graph).ok() != std::fs::canonicalize(layout.graph()).ok() {
        std::fs::copy(graph, layout.graph()).with_context(|| format!("cannot copy {}", graph.display()))?;
    }
    writeln!(out, "edges\t{edges}\nannotated_ids\t{}\nnodes\t{}", store.meta_count(), store.node_count())?;
    Ok(())
}

fn build_taxonomy(common: &Common, out: &mut impl Write) -> Result<()> {
    let store = load_store(common)?;
    let taxonomy = TaxonomyIndex::build(&store, &taxonomy_config(common))?;
    let layout = Layout::new(&common.out);
    layout.create()?;
    layout.save_taxonomy(&taxonomy)?;
    writeln!(out, "nodes\t{}\nclasses\t{}", taxonomy.total_nodes(), taxonomy.classes().count())?;
    Ok(())
}

fn train(args: &TrainArgs, out: &mut impl Write) -> Result<()> {
    let store = load_store(&args.common)?;
    let base = match args.model {
        Model::Transe => TrainConfig::default(),
        Model::Complex => TrainConfig::complex_default(),
    };
    let config = TrainConfig {
        dim: args.dim.unwrap_or(base.dim),
        epochs: args.epochs.unwrap_or(base.epochs),
        learning_rate: args.lr.unwrap_or(base.learning_rate),
        margin: args.margin.unwrap_or(base.margin),
        negatives: args.negatives.unwrap_or(base.negatives),
        batch_size: args.batch_size.unwrap_or(base.batch_size),
        seed: args.seed.unwrap_or(base.seed),
        norm: args.norm.unwrap_or(base.norm),
        regularization: args.reg.unwrap_or(base.regularization),
    };
    let (table, report, model) = match args.model {
        Model::Transe => {
            let (t, r) = transe::train_transe(&store, &config)?;
            (t, r, TripleModel::Transe(config.norm))
        }
        Model::Complex => {
            let (t, r) = complex::train_complex(&store, &config)?;
            (t, r, TripleModel::Complex)
        }
    };
    let eval = tail_prediction(&store, &table, model)?;
    let layout = Layout::new(&args.common.out);
    layout.create()?;
    layout.save_table(&table)?;
    layout.save_losses(table.kind(), &report)?;
    let final_loss = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    writeln!(out, "model\t{}", table.kind())?;
    writeln!(out, "nodes\t{}", table.len())?;
    writeln!(out, "epochs\t{}", report.epoch_losses.len())?;
    writeln!(out, "final_loss\t{final_loss:?}")?;
    writeln!(out, "hits@3\t{:?}", eval.hits_at(3))?;
    writeln!(out, "mrr\t{:?}", eval.mrr())?;
    Ok(())
}
