//! Modularity, Louvain community detection and partition comparison.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

/// Node → community assignment with dense ids `0..c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<usize>,
    num_communities: usize,
    modularity: Option<f64>,
}

impl Partition {
    /// Renumbers arbitrary labels densely in order of first appearance.
    pub fn from_assignment(labels: &[usize]) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let assignment: Vec<usize> = labels
            .iter()
            .map(|&l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            num_communities: remap.len(),
            modularity: None,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            num_communities: n,
            modularity: None,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    /// Q on the graph this partition was computed for, if known.
    pub fn modularity(&self) -> Option<f64> {
        self.modularity
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_communities];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Ids renumbered so community 0 is the largest (ties: smallest first node).
    pub fn by_size(&self) -> Partition {
        let sizes = self.sizes();
        let mut order: Vec<usize> = (0..self.num_communities).collect();
        // dense ids follow first appearance, so id order == first-node order
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let mut rank = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        Partition {
            assignment: self.assignment.iter().map(|&c| rank[c]).collect(),
            num_communities: self.num_communities,
            modularity: self.modularity,
        }
    }
}

/// Q = Σ_c [e_c/m − (d_c/2m)²] for an unweighted graph.
///
/// Intra-community edge counts and squared degree sums are accumulated as
/// integers, so the result does not depend on node or community numbering.
pub fn modularity(g: &UndirectedGraph, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != g.node_count() {
        return Err(Error::invalid(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.len(),
            g.node_count()
        )));
    }
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph("edges"));
    }
    let mut inside: u64 = 0;
    let mut degree_sums: HashMap<usize, u64> = HashMap::new();
    for v in 0..g.node_count() {
        *degree_sums.entry(assignment[v]).or_default() += g.degree(v) as u64;
    }
    for (u, v) in g.edges() {
        if assignment[u] == assignment[v] {
            inside += 1;
        }
    }
    let squares: u128 = degree_sums.values().map(|&d| (d as u128) * (d as u128)).sum();
    let m = m as f64;
    Ok(inside as f64 / m - squares as f64 / (4.0 * m * m))
}

/// Weighted graph used at the aggregated Louvain levels. `loops[i]` is the
/// weight of `A_ii` (twice the internal edge weight); `adj` holds only
/// off-diagonal entries.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_graph(g: &UndirectedGraph) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..g.node_count())
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect();
        let strength: Vec<f64> = adj.iter().map(|l| l.len() as f64).collect();
        Level {
            loops: vec![0.0; adj.len()],
            two_m: strength.iter().sum(),
            adj,
            strength,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Local moving until a full pass makes no move. Returns the community
    /// of each level node (not yet dense) and whether anything moved.
    fn local_moves(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut total: Vec<f64> = self.strength.clone();
        let mut links = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        let mut any_move = false;

        const MAX_PASSES: usize = 1_000;
        for _ in 0..MAX_PASSES {
            order.shuffle(rng);
            let mut moved = false;
            for &v in &order {
                let own = comm[v];
                let k = self.strength[v];
                for &(u, w) in &self.adj[v] {
                    let c = comm[u];
                    if links[c] == 0.0 {
                        touched.push(c);
                    }
                    links[c] += w;
                }
                total[own] -= k;

                let gain = |c: usize, links_c: f64| links_c - total[c] * k / self.two_m;
                let mut best = own;
                let mut best_gain = gain(own, links[own]);
                touched.sort_unstable();
                for &c in &touched {
                    if c == own {
                        continue;
                    }
                    let g = gain(c, links[c]);
                    if g > best_gain {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += k;
                if best != own {
                    comm[v] = best;
                    moved = true;
                }
                for &c in &touched {
                    links[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        (comm, any_move)
    }

    fn aggregate(&self, dense: &[usize], count: usize) -> Level {
        let mut loops = vec![0.0; count];
        let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); count];
        for v in 0..self.len() {
            let cv = dense[v];
            loops[cv] += self.loops[v];
            for &(u, w) in &self.adj[v] {
                let cu = dense[u];
                if cu == cv {
                    loops[cv] += w;
                } else {
                    *maps[cv].entry(cu).or_default() += w;
                }
            }
        }
        let adj: Vec<Vec<(usize, f64)>> = maps
            .into_iter()
            .map(|m| {
                let mut l: Vec<(usize, f64)> = m.into_iter().collect();
                l.sort_unstable_by_key(|&(u, _)| u);
                l
            })
            .collect();
        let strength: Vec<f64> = adj
            .iter()
            .zip(&loops)
            .map(|(l, &s)| s + l.iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        Level {
            adj,
            loops,
            strength,
            two_m: self.two_m,
        }
    }
}

/// Louvain output with the modularity reached after each level.
#[derive(Debug, Clone, PartialEq)]
pub struct LouvainRun {
    pub partition: Partition,
    pub level_modularity: Vec<f64>,
}

pub fn louvain(g: &UndirectedGraph, seed: u64) -> Result<Partition> {
    louvain_trace(g, seed).map(|run| run.partition)
}

/// Two-phase Louvain: local moving, then contraction of communities into
/// nodes, repeated while modularity improves. Visit order is shuffled per
/// pass from `seed`; equal gains keep the node where it is, and otherwise go
/// to the lowest community id.
pub fn louvain_trace(g: &UndirectedGraph, seed: u64) -> Result<LouvainRun> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph("edges"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat: Vec<usize> = (0..g.node_count()).collect();
    let mut best_q = modularity(g, &flat)?;
    let mut trace = Vec::new();
    let mut level = Level::from_graph(g);

    loop {
        let (comm, moved) = level.local_moves(&mut rng);
        if !moved {
            break;
        }
        let dense = Partition::from_assignment(&comm);
        let candidate: Vec<usize> = flat.iter().map(|&c| dense.assignment[c]).collect();
        let q = modularity(g, &candidate)?;
        if q <= best_q {
            break;
        }
        best_q = q;
        flat = candidate;
        trace.push(q);
        level = level.aggregate(&dense.assignment, dense.num_communities);
        if level.len() == 1 {
            break;
        }
    }

    let mut partition = Partition::from_assignment(&flat);
    partition.modularity = Some(best_q);
    Ok(LouvainRun {
        partition,
        level_modularity: trace,
    })
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, normalized by the arithmetic mean of the
/// two entropies. Two single-community partitions score 1.
pub fn compare_partitions(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "partitions cover {} and {} nodes",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("empty partitions"));
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.assignment.iter().zip(&b.assignment) {
        *joint.entry((x, y)).or_default() += 1;
    }
    let (sa, sb) = (a.sizes(), b.sizes());
    let ha = entropy(sa.iter().copied(), n);
    let hb = entropy(sb.iter().copied(), n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    let mut cells: Vec<(&(usize, usize), &usize)> = joint.iter().collect();
    cells.sort_unstable();
    for (&(x, y), &c) in cells {
        let pxy = c as f64 / n;
        mi += pxy * (pxy * n * n / (sa[x] as f64 * sb[y] as f64)).ln();
    }
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// TSV with header `token<TAB>community_id`; communities numbered by
/// descending size.
pub fn write_partition_tsv<W: Write>(g: &UndirectedGraph, p: &Partition, mut w: W) -> Result<()> {
    if p.len() != g.node_count() {
        return Err(Error::invalid("partition does not match graph"));
    }
    let ranked = p.by_size();
    writeln!(w, "token\tcommunity_id")?;
    for v in 0..g.node_count() {
        writeln!(w, "{}\t{}", g.label(v), ranked.assignment[v])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangles_with_bridge() -> UndirectedGraph {
        UndirectedGraph::with_nodes(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn modularity_fixtures() {
        let g = triangles_with_bridge();
        assert_eq!(modularity(&g, &[0; 6]).unwrap(), 0.0);
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12, "{q}");
        assert!(modularity(&g, &[0; 5]).is_err());
        assert!(modularity(&UndirectedGraph::with_nodes(3, []).unwrap(), &[0; 3]).is_err());
    }

    #[test]
    fn louvain_two_triangles() {
        let g = UndirectedGraph::with_nodes(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        for seed in 0..5 {
            let p = louvain(&g, seed).unwrap();
            assert_eq!(p.assignment(), [0, 0, 0, 1, 1, 1]);
            assert!((p.modularity().unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn louvain_complete_graph_is_one_community() {
        let n = 7;
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        let g = UndirectedGraph::with_nodes(n, edges).unwrap();
        let p = louvain(&g, 3).unwrap();
        assert_eq!(p.num_communities(), 1);
        assert_eq!(p.modularity(), Some(0.0));
    }

    #[test]
    fn louvain_reports_flat_modularity() {
        let g = triangles_with_bridge();
        let run = louvain_trace(&g, 11).unwrap();
        let q = modularity(&g, run.partition.assignment()).unwrap();
        assert_eq!(run.partition.modularity(), Some(q));
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
        assert!(run.level_modularity.windows(2).all(|w| w[0] <= w[1]));
        assert!(louvain(&UndirectedGraph::with_nodes(2, []).unwrap(), 0).is_err());
    }

    #[test]
    fn nmi_fixtures() {
        let a = Partition::from_assignment(&[0, 0, 1, 1]);
        let b = Partition::from_assignment(&[0, 1, 0, 1]);
        let one = Partition::from_assignment(&[0, 0, 0, 0]);
        assert!((compare_partitions(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(compare_partitions(&a, &b).unwrap().abs() < 1e-12);
        assert_eq!(compare_partitions(&a, &one).unwrap(), 0.0);
        assert_eq!(compare_partitions(&one, &one).unwrap(), 1.0);
        let relabeled = Partition::from_assignment(&[7, 7, 3, 3]);
        assert!((compare_partitions(&a, &relabeled).unwrap() - 1.0).abs() < 1e-12);
        assert!(compare_partitions(&a, &Partition::singletons(3)).is_err());
    }

    #[test]
    fn partition_dump_orders_by_size() {
        let g = UndirectedGraph::with_nodes(4, [(0, 1), (2, 3), (1, 2)]).unwrap();
        let p = Partition::from_assignment(&[5, 9, 9, 9]);
        let mut out = Vec::new();
        write_partition_tsv(&g, &p, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "token\tcommunity_id\nv0\t1\nv1\t0\nv2\t0\nv3\t0\n"
        );
    }
}
