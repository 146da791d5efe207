//! Command-line front end. Every subcommand computes its outputs in memory
//! first and only touches the output directory once all inputs validated.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::community::{louvain, write_partition_tsv};
use crate::embedding::{
    load_embeddings, random_baseline, stats, synth_mixture, write_embeddings, EmbeddingMatrix,
};
use crate::error::{Error, Result};
use crate::export::{write_graphml, NodeAttributes};
use crate::graph::{
    components, giant_component, induce_ego_graph, induce_knn_graph, induce_proximity_graph,
    read_edge_list, write_edge_list, UndirectedGraph,
};
use crate::metrics::{
    metrics_report, pagerank, sweep_knn, sweep_proximity, ReportOptions, DEFAULT_DAMPING,
    DEFAULT_PAGERANK_TOL, DEFAULT_PATH_SOURCES,
};
use crate::neighbors::{knn_all, knn_for_queries, radius_all, write_neighbor_tsv, NeighborTable};

pub const EDGES_FILE: &str = "edges.tsv";
pub const GRAPHML_FILE: &str = "graph.graphml";
pub const NEIGHBORS_FILE: &str = "neighbors.tsv";
pub const METRICS_FILE: &str = "metrics.json";
pub const SWEEP_FILE: &str = "sweep.tsv";
pub const PARTITION_FILE: &str = "partition.tsv";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";

#[derive(Debug, Parser)]
#[command(name = "langnet", version, about = "Induce and analyze language networks from word embeddings")]
pub struct Cli {
    /// Worker threads for neighbor search and metrics (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a graph and write its edge list (and optionally GraphML).
    Induce(InduceArgs),
    /// Graph statistics across a list of k or d values.
    Sweep(SweepArgs),
    /// Clustering, path length, power-law fit and random baselines as JSON.
    Metrics(MetricsArgs),
    /// Louvain communities as a token/community TSV.
    Communities(CommunitiesArgs),
    /// GraphML with label, degree, community_id and pagerank attributes.
    Export(ExportArgs),
    /// Gaussian-mixture embeddings with planted clusters.
    Synth(SynthArgs),
    /// Uniform random embeddings matched to a trained file's mean and std.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Knn,
    Proximity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Edgelist,
    Graphml,
    Json,
    Tsv,
}

#[derive(Debug, Clone, Args)]
pub struct GraphSource {
    /// Embedding file in the `<n> <dim>` text format.
    #[arg(long, required_unless_present = "graph")]
    pub input: Option<PathBuf>,

    /// Existing edge list (`token_u<TAB>token_v`) instead of embeddings.
    #[arg(long, conflicts_with_all = ["input", "top", "method", "k", "d", "queries"])]
    pub graph: Option<PathBuf>,

    /// Keep only the N most frequent words.
    #[arg(long)]
    pub top: Option<usize>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,

    /// Neighbors per word for the k-NN method.
    #[arg(short = 'k')]
    pub k: Option<usize>,

    /// Distance threshold for the proximity method.
    #[arg(short = 'd')]
    pub d: Option<f64>,

    /// Query only the N most frequent words; neighbors come from all loaded rows.
    #[arg(long)]
    pub queries: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InduceArgs {
    #[command(flatten)]
    pub source: GraphSource,

    /// Keep only the giant connected component.
    #[arg(long)]
    pub gcc: bool,

    /// Attach Louvain community ids to GraphML nodes.
    #[arg(long)]
    pub communities: bool,

    /// Attach PageRank scores to GraphML nodes.
    #[arg(long)]
    pub pagerank: bool,

    #[arg(long, default_value_t = 0)]
    pub louvain_seed: u64,

    #[arg(long)]
    pub out: PathBuf,

    /// Extra outputs: graphml, tsv (neighbor table). The edge list is always written.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub top: Option<usize>,

    #[arg(long, value_enum)]
    pub method: Method,

    /// k values, e.g. `2,4,6` or `2..30`.
    #[arg(long)]
    pub ks: Option<String>,

    /// d values, e.g. `0.8,1.0,1.2`.
    #[arg(long)]
    pub ds: Option<String>,

    #[arg(long, default_value_t = 0)]
    pub louvain_seed: u64,

    /// Directory for sweep.tsv; prints to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub source: GraphSource,

    /// Seed for sampled path-length sources.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Seed for the G(n, m) baseline graph.
    #[arg(long, default_value_t = 0)]
    pub baseline_seed: u64,

    #[arg(long, default_value_t = DEFAULT_PATH_SOURCES)]
    pub path_sources: usize,

    /// Lower degree cutoff for the power-law fit (default: smallest positive degree).
    #[arg(long)]
    pub x_min: Option<usize>,

    /// Include the degree histogram in the JSON.
    #[arg(long)]
    pub histogram: bool,

    /// Directory for metrics.json; the JSON is printed either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CommunitiesArgs {
    #[command(flatten)]
    pub source: GraphSource,

    #[arg(long)]
    pub gcc: bool,

    #[arg(long, default_value_t = 0)]
    pub louvain_seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub source: GraphSource,

    #[arg(long)]
    pub gcc: bool,

    #[arg(long, default_value_t = 0)]
    pub louvain_seed: u64,

    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub dim: usize,

    #[arg(long, default_value_t = 1)]
    pub clusters: usize,

    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,

    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Trained embeddings whose mean and std set the sampling interval.
    #[arg(long)]
    pub input: PathBuf,

    /// Rows to generate (default: rows in the input).
    #[arg(long)]
    pub n: Option<usize>,

    /// Dimension (default: input dimension).
    #[arg(long)]
    pub dim: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `a,b,c` or an inclusive integer range `a..b`.
pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| Error::invalid(format!("bad k range {s:?}")))?;
        let hi: usize = hi.trim().parse().map_err(|_| Error::invalid(format!("bad k range {s:?}")))?;
        if lo > hi {
            return Err(Error::invalid(format!("empty k range {s:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::invalid(format!("bad k value {t:?}"))))
        .collect()
}

pub fn parse_d_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|d| d.is_finite())
                .ok_or_else(|| Error::invalid(format!("bad d value {t:?}")))
        })
        .collect()
}

fn load(path: &Path, top: Option<usize>) -> Result<EmbeddingMatrix> {
    load_embeddings(path, top)
}

struct Built {
    graph: UndirectedGraph,
    table: Option<NeighborTable>,
    vocab_tokens: Option<EmbeddingMatrix>,
}

fn build_graph(src: &GraphSource) -> Result<Built> {
    if let Some(path) = &src.graph {
        let graph = read_edge_list(BufReader::new(File::open(path)?))?;
        return Ok(Built {
            graph,
            table: None,
            vocab_tokens: None,
        });
    }
    let input = src
        .input
        .as_ref()
        .ok_or_else(|| Error::invalid("--input or --graph is required"))?;
    let method = src
        .method
        .ok_or_else(|| Error::invalid("--method is required with --input"))?;
    let (table, graph, m) = match method {
        Method::Knn => {
            if src.d.is_some() {
                return Err(Error::invalid("-d applies to the proximity method only"));
            }
            let k = src.k.ok_or_else(|| Error::invalid("--method knn needs -k"))?;
            let m = load(input, src.top)?;
            match src.queries {
                Some(q) => {
                    if q == 0 || q > m.n() {
                        return Err(Error::invalid(format!(
                            "--queries {q} out of range 1..={}",
                            m.n()
                        )));
                    }
                    let ids: Vec<usize> = (0..q).collect();
                    let t = knn_for_queries(&m, &ids, k)?;
                    let g = induce_ego_graph(&t, m.vocab())?;
                    (t, g, m)
                }
                None => {
                    let t = knn_all(&m, k)?;
                    let g = induce_knn_graph(&t, m.vocab())?;
                    (t, g, m)
                }
            }
        }
        Method::Proximity => {
            if src.k.is_some() || src.queries.is_some() {
                return Err(Error::invalid("-k and --queries apply to the knn method only"));
            }
            let d = src.d.ok_or_else(|| Error::invalid("--method proximity needs -d"))?;
            let m = load(input, src.top)?;
            let t = radius_all(&m, d)?;
            let g = induce_proximity_graph(&t, m.vocab())?;
            (t, g, m)
        }
    };
    Ok(Built {
        graph,
        table: Some(table),
        vocab_tokens: Some(m),
    })
}

fn restrict(g: UndirectedGraph, gcc: bool) -> Result<UndirectedGraph> {
    if gcc {
        giant_component(&g)
    } else {
        Ok(g)
    }
}

/// Rendered output files, written together once everything succeeded.
#[derive(Default)]
struct Outputs(Vec<(&'static str, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.0.push((name, bytes));
    }

    fn write_to(self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in self.0 {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn summary_line(g: &UndirectedGraph) -> String {
    format!(
        "nodes: {}, edges: {}, components: {}",
        g.node_count(),
        g.edge_count(),
        components(g).count()
    )
}

fn induce(args: &InduceArgs, out: &mut dyn Write) -> Result<()> {
    if args.format.contains(&Format::Json) {
        return Err(Error::invalid("induce writes edgelist, graphml or tsv"));
    }
    let built = build_graph(&args.source)?;
    let g = restrict(built.graph, args.gcc)?;
    let mut files = Outputs::default();
    let mut edges = Vec::new();
    write_edge_list(&g, &mut edges)?;
    files.add(EDGES_FILE, edges);

    if args.format.contains(&Format::Graphml) {
        let partition = if args.communities && g.edge_count() > 0 {
            Some(louvain(&g, args.louvain_seed)?)
        } else {
            None
        };
        let ranks = if args.pagerank {
            Some(pagerank(&g, DEFAULT_DAMPING, DEFAULT_PAGERANK_TOL)?)
        } else {
            None
        };
        let mut xml = Vec::new();
        write_graphml(
            &g,
            NodeAttributes {
                communities: partition.as_ref(),
                pagerank: ranks.as_deref(),
            },
            &mut xml,
        )?;
        files.add(GRAPHML_FILE, xml);
    }
    if args.format.contains(&Format::Tsv) {
        let (Some(table), Some(m)) = (&built.table, &built.vocab_tokens) else {
            return Err(Error::invalid("a neighbor table needs embedding input"));
        };
        let mut tsv = Vec::new();
        write_neighbor_tsv(table, m.vocab(), &mut tsv)?;
        files.add(NEIGHBORS_FILE, tsv);
    }
    files.write_to(&args.out)?;
    writeln!(out, "{}", summary_line(&g))?;
    Ok(())
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let curve = match args.method {
        Method::Knn => {
            if args.ds.is_some() {
                return Err(Error::invalid("--ds applies to the proximity method only"));
            }
            let ks = parse_k_list(args.ks.as_deref().ok_or_else(|| Error::invalid("--method knn needs --ks"))?)?;
            let m = load(&args.input, args.top)?;
            sweep_knn(&m, &ks, args.louvain_seed)?
        }
        Method::Proximity => {
            if args.ks.is_some() {
                return Err(Error::invalid("--ks applies to the knn method only"));
            }
            let ds = parse_d_list(args.ds.as_deref().ok_or_else(|| Error::invalid("--method proximity needs --ds"))?)?;
            let m = load(&args.input, args.top)?;
            sweep_proximity(&m, &ds, args.louvain_seed)?
        }
    };
    let mut tsv = Vec::new();
    curve.write_tsv(&mut tsv)?;
    match &args.out {
        Some(dir) => {
            let mut files = Outputs::default();
            files.add(SWEEP_FILE, tsv);
            files.write_to(dir)?;
        }
        None => out.write_all(&tsv)?,
    }
    Ok(())
}

fn metrics(args: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let g = build_graph(&args.source)?.graph;
    let opts = ReportOptions {
        path_sources: args.path_sources,
        seed: args.seed,
        baseline_seed: args.baseline_seed,
        x_min: args.x_min.or(args.source.k),
        include_histogram: args.histogram,
    };
    if opts.path_sources == 0 {
        return Err(Error::invalid("--path-sources must be at least 1"));
    }
    let report = metrics_report(&g, &opts)?;
    let mut json = serde_json::to_vec_pretty(&report).map_err(std::io::Error::from)?;
    json.push(b'\n');
    if let Some(dir) = &args.out {
        let mut files = Outputs::default();
        files.add(METRICS_FILE, json.clone());
        files.write_to(dir)?;
    }
    out.write_all(&json)?;
    Ok(())
}

fn communities(args: &CommunitiesArgs, out: &mut dyn Write) -> Result<()> {
    let g = restrict(build_graph(&args.source)?.graph, args.gcc)?;
    let p = louvain(&g, args.louvain_seed)?;
    let mut tsv = Vec::new();
    write_partition_tsv(&g, &p, &mut tsv)?;
    let mut files = Outputs::default();
    files.add(PARTITION_FILE, tsv);
    files.write_to(&args.out)?;
    writeln!(
        out,
        "communities: {}, modularity: {:.6}",
        p.num_communities(),
        p.modularity().unwrap_or(f64::NAN)
    )?;
    Ok(())
}

fn export(args: &ExportArgs, out: &mut dyn Write) -> Result<()> {
    let g = restrict(build_graph(&args.source)?.graph, args.gcc)?;
    let partition = if g.edge_count() > 0 {
        Some(louvain(&g, args.louvain_seed)?)
    } else {
        None
    };
    let ranks = pagerank(&g, args.damping, DEFAULT_PAGERANK_TOL)?;
    let mut xml = Vec::new();
    write_graphml(
        &g,
        NodeAttributes {
            communities: partition.as_ref(),
            pagerank: Some(&ranks),
        },
        &mut xml,
    )?;
    let mut edges = Vec::new();
    write_edge_list(&g, &mut edges)?;
    let mut files = Outputs::default();
    files.add(GRAPHML_FILE, xml);
    files.add(EDGES_FILE, edges);
    files.write_to(&args.out)?;
    writeln!(out, "{}", summary_line(&g))?;
    Ok(())
}

fn synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let (m, truth) = synth_mixture(args.n, args.dim, args.clusters, args.spread, args.separation, args.seed)?;
    let mut text = Vec::new();
    write_embeddings(&m, &mut text)?;
    let mut tsv = b"token\tcommunity_id\n".to_vec();
    for (i, c) in truth.assignment().iter().enumerate() {
        writeln!(tsv, "{}\t{c}", m.vocab().token(i))?;
    }
    let mut files = Outputs::default();
    files.add(EMBEDDINGS_FILE, text);
    files.add(PARTITION_FILE, tsv);
    files.write_to(&args.out)?;
    writeln!(out, "rows: {}, dim: {}, clusters: {}", m.n(), m.dim(), args.clusters)?;
    Ok(())
}

fn baseline(args: &BaselineArgs, out: &mut dyn Write) -> Result<()> {
    let trained = load(&args.input, None)?;
    let s = stats(&trained);
    let m = random_baseline(
        args.n.unwrap_or(trained.n()),
        args.dim.unwrap_or(trained.dim()),
        s,
        args.seed,
    )?;
    let mut text = Vec::new();
    write_embeddings(&m, &mut text)?;
    let mut files = Outputs::default();
    files.add(EMBEDDINGS_FILE, text);
    files.write_to(&args.out)?;
    writeln!(out, "rows: {}, dim: {}, mean: {}, std: {}", m.n(), m.dim(), s.mean, s.std)?;
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Induce(a) => induce(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Communities(a) => communities(a, out),
        Command::Export(a) => export(a, out),
        Command::Synth(a) => synth(a, out),
        Command::Baseline(a) => baseline(a, out),
    }
}

/// Runs one parsed invocation, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::invalid("--threads must be at least 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            let mut buf = Vec::new();
            pool.install(|| dispatch(cli, &mut buf))?;
            out.write_all(&buf)?;
            Ok(())
        }
        None => dispatch(cli, out),
    }
}

/// Process exit status for an error: 2 for I/O failures, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("2,4, 6").unwrap(), [2, 4, 6]);
        assert_eq!(parse_k_list("2..5").unwrap(), [2, 3, 4, 5]);
        assert!(parse_k_list("5..2").is_err());
        assert!(parse_k_list("a").is_err());
    }

    #[test]
    fn d_lists() {
        assert_eq!(parse_d_list("0.8,1.2").unwrap(), [0.8, 1.2]);
        assert!(parse_d_list("0.8,inf").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "langnet", "induce", "--input", "e.txt", "--method", "knn", "-k", "6", "--top", "20000",
            "--out", "o", "--format", "graphml,tsv",
        ])
        .unwrap();
        let Command::Induce(a) = cli.command else { panic!() };
        assert_eq!(a.source.k, Some(6));
        assert_eq!(a.format, [Format::Graphml, Format::Tsv]);
        assert!(Cli::try_parse_from(["langnet", "metrics", "--graph", "g", "-k", "3"]).is_err());
        assert!(Cli::try_parse_from(["langnet", "metrics"]).is_err());
    }
}
