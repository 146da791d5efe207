//! Network statistics: clustering, path lengths, degree distribution and
//! power-law fit, random-graph baselines, PageRank and parameter sweeps.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::community::louvain;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{components, giant_component, induce_knn_graph, induce_proximity_graph, UndirectedGraph};
use crate::neighbors::{knn_all, radius_all};

/// Graphs up to this size get exact all-pairs path lengths by default.
pub const EXACT_PATH_LIMIT: usize = 2_000;
pub const DEFAULT_PATH_SOURCES: usize = 1_000;
pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_PAGERANK_TOL: f64 = 1e-10;
pub const PAGERANK_MAX_ITER: usize = 200;

/// Per-node fraction of closed neighbor pairs; 0 for degree < 2.
pub fn local_clustering(g: &UndirectedGraph) -> Vec<f64> {
    let n = g.node_count();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![false; n],
            |mark, v| {
                let nbrs = g.neighbors(v);
                let deg = nbrs.len();
                if deg < 2 {
                    return 0.0;
                }
                for &u in nbrs {
                    mark[u] = true;
                }
                let mut closed = 0usize;
                for &u in nbrs {
                    closed += g.neighbors(u).iter().filter(|&&w| mark[w]).count();
                }
                for &u in nbrs {
                    mark[u] = false;
                }
                // each triangle through v is seen from both of its other corners
                (closed / 2) as f64 / (deg * (deg - 1) / 2) as f64
            },
        )
        .collect()
}

/// Average local clustering coefficient.
pub fn clustering_coefficient(g: &UndirectedGraph) -> Result<f64> {
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph("nodes"));
    }
    let local = local_clustering(g);
    Ok(local.iter().sum::<f64>() / local.len() as f64)
}

fn bfs_distance_sum(g: &UndirectedGraph, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) -> (u64, usize) {
    dist.fill(u32::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    let (mut total, mut reached) = (0u64, 0usize);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v];
        total += dv as u64;
        reached += 1;
        for &u in g.neighbors(v) {
            if dist[u] == u32::MAX {
                dist[u] = dv + 1;
                queue.push_back(u);
            }
        }
    }
    (total, reached)
}

/// Mean hop distance from each source to every other node, as an exact
/// integer total divided once.
fn mean_distance_from(g: &UndirectedGraph, sources: &[usize]) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::invalid("path length needs at least two nodes"));
    }
    let sums: Vec<(u64, usize)> = sources
        .par_iter()
        .map_init(
            || (vec![u32::MAX; n], VecDeque::new()),
            |(dist, queue), &s| bfs_distance_sum(g, s, dist, queue),
        )
        .collect();
    if sums.iter().any(|&(_, reached)| reached != n) {
        return Err(Error::Disconnected {
            components: components(g).count(),
        });
    }
    let total: u64 = sums.iter().map(|&(t, _)| t).sum();
    Ok(total as f64 / (sources.len() as f64 * (n - 1) as f64))
}

/// Mean shortest-path length over all node pairs of a connected graph.
pub fn average_path_length_exact(g: &UndirectedGraph) -> Result<f64> {
    let all: Vec<usize> = (0..g.node_count()).collect();
    mean_distance_from(g, &all)
}

/// Mean BFS distance from `sources` distinct nodes drawn uniformly at random.
/// With `sources == n` this is the exact value.
pub fn average_path_length_sampled(g: &UndirectedGraph, sources: usize, seed: u64) -> Result<f64> {
    let n = g.node_count();
    if sources == 0 || sources > n {
        return Err(Error::invalid(format!("sources = {sources} out of range 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, sources).into_vec();
    picked.sort_unstable();
    mean_distance_from(g, &picked)
}

/// Exact below [`EXACT_PATH_LIMIT`] nodes or when `sources >= n`, sampled
/// otherwise. Returns the value and whether it was estimated.
pub fn average_path_length(g: &UndirectedGraph, sources: usize, seed: u64) -> Result<(f64, bool)> {
    let n = g.node_count();
    if n <= EXACT_PATH_LIMIT || sources >= n {
        Ok((average_path_length_exact(g)?, false))
    } else {
        Ok((average_path_length_sampled(g, sources, seed)?, true))
    }
}

pub type DegreeHistogram = BTreeMap<usize, usize>;

pub fn degree_distribution(g: &UndirectedGraph) -> DegreeHistogram {
    let mut hist = BTreeMap::new();
    for v in 0..g.node_count() {
        *hist.entry(g.degree(v)).or_insert(0) += 1;
    }
    hist
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Positive exponent of P(d) ∝ d^(−alpha).
    pub alpha: f64,
    /// Signed slope, `-alpha`.
    pub gamma: f64,
    pub x_min: usize,
    /// Number of observations with degree ≥ x_min.
    pub tail: usize,
}

/// Discrete power-law MLE in its continuous approximation:
/// `alpha = 1 + N / Σ ln(d / (x_min − ½))` over degrees `d ≥ x_min`.
pub fn power_law_exponent(hist: &DegreeHistogram, x_min: usize) -> Result<PowerLawFit> {
    if x_min == 0 {
        return Err(Error::invalid("x_min must be at least 1"));
    }
    let tail: Vec<(usize, usize)> = hist
        .range(x_min..)
        .filter(|&(_, &c)| c > 0)
        .map(|(&d, &c)| (d, c))
        .collect();
    if tail.len() < 2 {
        return Err(Error::Degenerate(format!(
            "power-law fit needs at least two distinct degrees >= {x_min}"
        )));
    }
    let shift = x_min as f64 - 0.5;
    let count: usize = tail.iter().map(|&(_, c)| c).sum();
    let log_sum: f64 = tail.iter().map(|&(d, c)| c as f64 * (d as f64 / shift).ln()).sum();
    let alpha = 1.0 + count as f64 / log_sum;
    Ok(PowerLawFit {
        alpha,
        gamma: -alpha,
        x_min,
        tail: count,
    })
}

/// Uniform random graph with exactly `m` edges over `n` nodes.
pub fn gnm_random_graph(n: usize, m: usize, seed: u64) -> Result<UndirectedGraph> {
    let max = n * n.saturating_sub(1) / 2;
    if m > max {
        return Err(Error::invalid(format!("{m} edges exceed the {max} possible on {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, max, m);
    UndirectedGraph::with_nodes(n, picks.into_iter().map(|p| pair_from_index(p, n)))
}

/// Inverse of the row-major enumeration of pairs (u, v), u < v.
fn pair_from_index(p: usize, n: usize) -> (usize, usize) {
    // row u starts at u*n - u*(u+1)/2
    let start = |u: usize| u * n - u * (u + 1) / 2;
    let nf = n as f64;
    let pf = p as f64;
    let guess = ((2.0 * nf - 1.0 - ((2.0 * nf - 1.0).powi(2) - 8.0 * pf).max(0.0).sqrt()) / 2.0).floor();
    let mut u = (guess.max(0.0) as usize).min(n - 2);
    while u > 0 && start(u) > p {
        u -= 1;
    }
    while start(u + 1) <= p {
        u += 1;
    }
    (u, u + 1 + p - start(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErBaseline {
    pub c_random: f64,
    pub pl_random: Option<f64>,
    pub pl_estimated: bool,
}

/// Clustering and path length expected of a G(n, m) graph. The clustering
/// term is the edge density `2m / (n(n−1))`; the path length is measured on
/// the giant component of a generated instance.
pub fn er_baseline(n: usize, m: usize, sources: usize, seed: u64) -> Result<ErBaseline> {
    let g = gnm_random_graph(n, m, seed)?;
    let c_random = if n < 2 { 0.0 } else { 2.0 * m as f64 / (n as f64 * (n - 1) as f64) };
    let gcc = giant_component(&g)?;
    let (pl_random, pl_estimated) = if gcc.node_count() < 2 {
        (None, false)
    } else {
        let (pl, est) = average_path_length(&gcc, sources, seed)?;
        (Some(pl), est)
    };
    Ok(ErBaseline {
        c_random,
        pl_random,
        pl_estimated,
    })
}

/// PageRank by power iteration, each undirected edge acting as two links.
/// Mass on isolated nodes is spread uniformly.
pub fn pagerank(g: &UndirectedGraph, damping: f64, tol: f64) -> Result<Vec<f64>> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::invalid(format!("damping must lie in (0, 1), got {damping}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| rank[v]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        next.par_iter_mut().enumerate().for_each(|(v, out)| {
            let inflow: f64 = g
                .neighbors(v)
                .iter()
                .map(|&u| rank[u] / g.degree(u) as f64)
                .sum();
            *out = base + damping * inflow;
        });
        let diff: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if diff < tol {
            break;
        }
    }
    let total: f64 = rank.iter().sum();
    rank.iter_mut().for_each(|r| *r /= total);
    Ok(rank)
}

/// Summary statistics of one graph against its G(n, m) baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n: usize,
    pub m: usize,
    pub num_components: usize,
    pub gcc_fraction: f64,
    pub clustering_coefficient: f64,
    pub c_random: f64,
    pub avg_path_length: Option<f64>,
    pub pl_estimated: bool,
    pub pl_random: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub x_min: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_histogram: Option<DegreeHistogram>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub path_sources: usize,
    pub seed: u64,
    pub baseline_seed: u64,
    /// Lower cutoff for the power-law fit; defaults to the smallest
    /// positive degree (k for a k-NN graph).
    pub x_min: Option<usize>,
    pub include_histogram: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            path_sources: DEFAULT_PATH_SOURCES,
            seed: 0,
            baseline_seed: 0,
            x_min: None,
            include_histogram: false,
        }
    }
}

/// Clustering, components and degree fit on the whole graph; path lengths
/// and baselines on its giant component.
pub fn metrics_report(g: &UndirectedGraph, opts: &ReportOptions) -> Result<MetricsReport> {
    let labeling = components(g);
    let clustering = clustering_coefficient(g)?;
    let gcc = giant_component(g)?;
    let (avg_path_length, pl_estimated) = if gcc.node_count() < 2 {
        (None, false)
    } else {
        let (pl, est) = average_path_length(&gcc, opts.path_sources, opts.seed)?;
        (Some(pl), est)
    };
    let baseline = er_baseline(gcc.node_count(), gcc.edge_count(), opts.path_sources, opts.baseline_seed)?;
    let hist = degree_distribution(g);
    let x_min = opts
        .x_min
        .unwrap_or_else(|| hist.range(1..).next().map_or(1, |(&d, _)| d));
    let fit = power_law_exponent(&hist, x_min).ok();
    Ok(MetricsReport {
        n: g.node_count(),
        m: g.edge_count(),
        num_components: labeling.count(),
        gcc_fraction: labeling.gcc_fraction(),
        clustering_coefficient: clustering,
        c_random: baseline.c_random,
        avg_path_length,
        pl_estimated: pl_estimated || baseline.pl_estimated,
        pl_random: baseline.pl_random,
        gamma: fit.map(|f| f.gamma),
        alpha: fit.map(|f| f.alpha),
        x_min,
        degree_histogram: opts.include_histogram.then_some(hist),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepKind {
    Knn,
    Proximity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub edges: usize,
    pub components: usize,
    pub gcc_fraction: f64,
    pub clustering: f64,
    /// Louvain modularity; `None` for an edgeless graph.
    pub modularity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub kind: SweepKind,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    /// Header `param edges components gcc_fraction clustering modularity`,
    /// one row per parameter value. Missing modularity prints as `NA`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "param\tedges\tcomponents\tgcc_fraction\tclustering\tmodularity")?;
        for p in &self.points {
            let param = match self.kind {
                SweepKind::Knn => format!("{}", p.param as usize),
                SweepKind::Proximity => format!("{}", p.param),
            };
            let q = p.modularity.map_or_else(|| "NA".to_string(), |q| format!("{q:.6}"));
            writeln!(
                w,
                "{param}\t{}\t{}\t{:.6}\t{:.6}\t{q}",
                p.edges, p.components, p.gcc_fraction, p.clustering
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sweep_point(g: &UndirectedGraph, param: f64, louvain_seed: u64) -> Result<SweepPoint> {
    let labeling = components(g);
    let modularity = if g.edge_count() == 0 {
        None
    } else {
        louvain(g, louvain_seed)?.modularity()
    };
    Ok(SweepPoint {
        param,
        edges: g.edge_count(),
        components: labeling.count(),
        gcc_fraction: labeling.gcc_fraction(),
        clustering: clustering_coefficient(g)?,
        modularity,
    })
}

fn check_increasing<T: PartialOrd + Copy + std::fmt::Display>(values: &[T], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("empty {what} list")));
    }
    if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "{what} list must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// k-NN graph metrics for each k. One search at the largest k serves every
/// smaller k through list prefixes.
pub fn sweep_knn(m: &EmbeddingMatrix, ks: &[usize], louvain_seed: u64) -> Result<SweepCurve> {
    check_increasing(ks, "k")?;
    let table = knn_all(m, *ks.last().expect("checked non-empty"))?;
    if ks[0] == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let points = ks
        .par_iter()
        .map(|&k| {
            let g = induce_knn_graph(&table.truncate_k(k)?, m.vocab())?;
            sweep_point(&g, k as f64, louvain_seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        kind: SweepKind::Knn,
        points,
    })
}

/// d-proximity graph metrics for each threshold, filtered from one radius
/// search at the largest d.
pub fn sweep_proximity(m: &EmbeddingMatrix, ds: &[f64], louvain_seed: u64) -> Result<SweepCurve> {
    check_increasing(ds, "d")?;
    let table = radius_all(m, *ds.last().expect("checked non-empty"))?;
    if ds[0] <= 0.0 {
        return Err(Error::invalid("d must be positive"));
    }
    let points = ds
        .par_iter()
        .map(|&d| {
            let g = induce_proximity_graph(&table.within_radius(d)?, m.vocab())?;
            sweep_point(&g, d, louvain_seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        kind: SweepKind::Proximity,
        points,
    })
}
