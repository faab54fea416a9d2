//! `kgsim`: batch driver for the similarity pipeline.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when the input
//! data or artifacts are unusable.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgsim_core::{EmbeddingKind, IndexMode, Metric, Norm};

#[derive(Debug, Parser)]
#[command(name = "kgsim", version, about = "Node similarity over a knowledge graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate an edge file and copy it into the artifacts directory.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Build the is-a closure and IDF weights.
    BuildTaxonomy {
        #[command(flatten)]
        common: Common,
    },
    /// Train TransE or ComplEx embeddings on the structural edges.
    Train(TrainArgs),
    /// Print the sentence form of nodes; optionally embed them as text vectors.
    Lexicalize(LexicalizeArgs),
    /// Load an external vector file as one of the embedding tables.
    IngestVectors(IngestVectorsArgs),
    /// Build nearest-neighbor indices over the saved tables.
    BuildIndex(BuildIndexArgs),
    /// Score a primary node against one or more secondary nodes.
    Similarity(SimilarityArgs),
    /// Nearest neighbors of a node in one embedding table.
    Neighbors(NeighborsArgs),
    /// Search node labels and aliases.
    Search(SearchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Edge file; defaults to the copy made by `ingest`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Artifacts directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = kgsim_core::taxonomy::SUBCLASS_OF)]
    subclass_prop: String,
    #[arg(long, default_value = kgsim_core::taxonomy::INSTANCE_OF)]
    instance_prop: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Shorthand for `--format json`.
    #[arg(long)]
    json: bool,
}

impl OutputArgs {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Transe,
    Complex,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_norm)]
    norm: Option<Norm>,
    /// L2 penalty of the ComplEx loss.
    #[arg(long)]
    reg: Option<f64>,
}

#[derive(Debug, Args)]
struct LexicalizeArgs {
    #[command(flatten)]
    common: Common,
    /// Nodes to lexicalize; all graph nodes when omitted.
    #[arg(long = "node")]
    nodes: Vec<String>,
    /// Also embed every node with the hashed bag-of-tokens provider and
    /// save the result as the text table.
    #[arg(long)]
    write_vectors: bool,
    #[arg(long, default_value_t = 64)]
    text_dim: usize,
}

#[derive(Debug, Args)]
struct IngestVectorsArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long, value_parser = parse_kind, default_value = "text")]
    kind: EmbeddingKind,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BuildIndexArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Table to index; every saved table when omitted.
    #[arg(long, value_parser = parse_kind)]
    table: Option<EmbeddingKind>,
    #[arg(long, value_parser = parse_metric, default_value = "euclidean")]
    metric: Metric,
    #[arg(long, value_parser = parse_mode, default_value = "exact")]
    mode: IndexMode,
    #[arg(long, default_value_t = 1)]
    partitions: usize,
    #[arg(long, default_value_t = 1)]
    probes: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimilarityArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    q1: String,
    /// Secondary nodes, comma separated or repeated.
    #[arg(long, required = true, value_delimiter = ',')]
    q2: Vec<String>,
    /// Include the shared parents behind the class score.
    #[arg(long)]
    explain: bool,
}

#[derive(Debug, Args)]
struct NeighborsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    qnode: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, value_parser = parse_kind)]
    table: Option<EmbeddingKind>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    q: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    limit: u64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// TOML settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config file and the port environment variable.
    #[arg(long)]
    port: Option<u32>,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Artifacts directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<EmbeddingKind, String> {
    s.parse().map_err(|e: kgsim_core::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: kgsim_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<IndexMode, String> {
    s.parse().map_err(|e: kgsim_core::Error| e.to_string())
}

fn parse_norm(s: &str) -> Result<Norm, String> {
    s.parse().map_err(|e: kgsim_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = commands::run(cli.command, &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(err), _) => {
            eprintln!("kgsim: {err}");
            ExitCode::from(2)
        }
        (_, Err(err)) => {
            eprintln!("kgsim: cannot write output: {err}");
            ExitCode::from(2)
        }
    }
}
