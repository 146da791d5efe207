//! Undirected language networks induced from neighbor tables.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::embedding::Vocabulary;
use crate::error::{Error, Result};
use crate::neighbors::{NeighborTable, QueryMode};

/// Simple undirected graph. Nodes are numbered `0..n` locally; each carries
/// the vocabulary index it came from (`ids`, strictly increasing for induced
/// graphs) and its token label.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    ids: Vec<usize>,
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl UndirectedGraph {
    /// Builds a graph from local-index edges. Self-loops are dropped and
    /// duplicate or reversed pairs collapse to one edge.
    pub fn from_edges(
        ids: Vec<usize>,
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = ids.len();
        if labels.len() != n {
            return Err(Error::invalid("ids and labels differ in length"));
        }
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut twice = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Ok(UndirectedGraph {
            ids,
            labels,
            adj,
            edge_count: twice / 2,
        })
    }

    /// Graph over synthetic nodes labelled `v0..v{n-1}`.
    pub fn with_nodes(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges(
            (0..n).collect(),
            (0..n).map(|i| format!("v{i}")).collect(),
            edges,
        )
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Subgraph induced on `nodes`; node order follows `nodes`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> UndirectedGraph {
        let mut local = vec![usize::MAX; self.node_count()];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let adj: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&v| {
                let mut list: Vec<usize> = self.adj[v]
                    .iter()
                    .map(|&u| local[u])
                    .filter(|&u| u != usize::MAX)
                    .collect();
                list.sort_unstable();
                list
            })
            .collect();
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        UndirectedGraph {
            ids: nodes.iter().map(|&v| self.ids[v]).collect(),
            labels: nodes.iter().map(|&v| self.labels[v].clone()).collect(),
            adj,
            edge_count,
        }
    }
}

fn check_vocab(nt: &NeighborTable, vocab: &Vocabulary) -> Result<()> {
    if vocab.len() != nt.num_points() {
        return Err(Error::invalid(format!(
            "vocabulary has {} tokens but the table covers {} points",
            vocab.len(),
            nt.num_points()
        )));
    }
    Ok(())
}

fn symmetrize(nt: &NeighborTable, vocab: &Vocabulary) -> Result<UndirectedGraph> {
    let n = nt.num_points();
    UndirectedGraph::from_edges(
        (0..n).collect(),
        vocab.tokens().to_vec(),
        nt.iter()
            .flat_map(|(q, list)| list.iter().map(move |nb| (q, nb.index))),
    )
}

/// Union of every row's k-NN links; reciprocal pairs merge.
pub fn induce_knn_graph(nt: &NeighborTable, vocab: &Vocabulary) -> Result<UndirectedGraph> {
    check_vocab(nt, vocab)?;
    if !matches!(nt.mode(), QueryMode::Knn(_)) {
        return Err(Error::invalid("k-NN induction needs a k-NN table"));
    }
    if !nt.covers_all_points() {
        return Err(Error::invalid(
            "k-NN induction needs a table over every point; use induce_ego_graph for query subsets",
        ));
    }
    symmetrize(nt, vocab)
}

/// Every pair at distance strictly below the table's radius.
pub fn induce_proximity_graph(nt: &NeighborTable, vocab: &Vocabulary) -> Result<UndirectedGraph> {
    check_vocab(nt, vocab)?;
    if !matches!(nt.mode(), QueryMode::Radius(_)) {
        return Err(Error::invalid("proximity induction needs a radius table"));
    }
    if !nt.covers_all_points() {
        return Err(Error::invalid("proximity induction needs a table over every point"));
    }
    symmetrize(nt, vocab)
}

/// Graph over the queries and every neighbor they reached. Neighbor-only
/// nodes get no links among themselves.
pub fn induce_ego_graph(nt: &NeighborTable, vocab: &Vocabulary) -> Result<UndirectedGraph> {
    check_vocab(nt, vocab)?;
    let mut present = vec![false; nt.num_points()];
    for (q, list) in nt.iter() {
        present[q] = true;
        for nb in list {
            present[nb.index] = true;
        }
    }
    let ids: Vec<usize> = (0..present.len()).filter(|&i| present[i]).collect();
    let mut local = vec![usize::MAX; present.len()];
    for (i, &id) in ids.iter().enumerate() {
        local[id] = i;
    }
    let labels = ids.iter().map(|&i| vocab.token(i).to_string()).collect();
    let edges: Vec<(usize, usize)> = nt
        .iter()
        .flat_map(|(q, list)| list.iter().map(move |nb| (q, nb.index)))
        .map(|(a, b)| (local[a], local[b]))
        .collect();
    UndirectedGraph::from_edges(ids, labels, edges)
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Connected components. Component 0 is the largest; equal sizes are
/// ordered by their smallest node.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Fraction of nodes in the largest component (0 for an empty graph).
    pub fn gcc_fraction(&self) -> f64 {
        match self.sizes.first() {
            Some(&s) => s as f64 / self.labels.len() as f64,
            None => 0.0,
        }
    }

    pub fn members(&self, component: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&v| self.labels[v] == component)
            .collect()
    }
}

pub fn components(g: &UndirectedGraph) -> ComponentLabeling {
    let n = g.node_count();
    let mut sets = DisjointSets::new(n);
    for (u, v) in g.edges() {
        sets.union(u, v);
    }
    // roots in order of their smallest member
    let mut root_slot: HashMap<usize, usize> = HashMap::new();
    let mut raw = Vec::with_capacity(n);
    let mut raw_sizes: Vec<usize> = Vec::new();
    for v in 0..n {
        let r = sets.find(v);
        let next = root_slot.len();
        let slot = *root_slot.entry(r).or_insert(next);
        if slot == raw_sizes.len() {
            raw_sizes.push(0);
        }
        raw_sizes[slot] += 1;
        raw.push(slot);
    }
    let mut order: Vec<usize> = (0..raw_sizes.len()).collect();
    order.sort_by(|&a, &b| raw_sizes[b].cmp(&raw_sizes[a]).then(a.cmp(&b)));
    let mut rank = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    ComponentLabeling {
        labels: raw.into_iter().map(|s| rank[s]).collect(),
        sizes: order.iter().map(|&s| raw_sizes[s]).collect(),
    }
}

pub fn giant_component(g: &UndirectedGraph) -> Result<UndirectedGraph> {
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph("nodes"));
    }
    let labeling = components(g);
    if labeling.count() == 1 {
        return Ok(g.clone());
    }
    Ok(g.induced_subgraph(&labeling.members(0)))
}

/// One `token_u<TAB>token_v` line per edge, `u < v`, sorted by index pair.
pub fn write_edge_list<W: Write>(g: &UndirectedGraph, mut w: W) -> Result<()> {
    for (u, v) in g.edges() {
        writeln!(w, "{}\t{}", g.label(u), g.label(v))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an edge list. Nodes are numbered in order of first appearance and
/// carry that number as their id.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<UndirectedGraph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    let mut node = |tok: &str, labels: &mut Vec<String>| {
        *index.entry(tok.to_string()).or_insert_with(|| {
            labels.push(tok.to_string());
            labels.len() - 1
        })
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(i + 1, "expected \"token_u<TAB>token_v\""));
        }
        let u = node(fields[0], &mut labels);
        let v = node(fields[1], &mut labels);
        if u == v {
            return Err(Error::parse(i + 1, "self-loop"));
        }
        edges.push((u, v));
    }
    let n = labels.len();
    UndirectedGraph::from_edges((0..n).collect(), labels, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingMatrix;
    use crate::neighbors::{knn_all, knn_for_queries, radius_all};

    fn line(points: &[f64]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(Vocabulary::synthetic(points.len()), 1, points.to_vec(), "line").unwrap()
    }

    fn edge_vec(g: &UndirectedGraph) -> Vec<(usize, usize)> {
        g.edges().collect()
    }

    #[test]
    fn knn_line_fixture() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let g = induce_knn_graph(&knn_all(&m, 1).unwrap(), m.vocab()).unwrap();
        assert_eq!(edge_vec(&g), [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.edge_count(), 3);

        let pair = line(&[0.0, 1.0]);
        let g = induce_knn_graph(&knn_all(&pair, 1).unwrap(), pair.vocab()).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn proximity_line_fixture() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let g = induce_proximity_graph(&radius_all(&m, 2.5).unwrap(), m.vocab()).unwrap();
        assert_eq!(edge_vec(&g), [(0, 1), (1, 2)]);
        let g = induce_proximity_graph(&radius_all(&m, 0.5).unwrap(), m.vocab()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 0));
        let g = induce_proximity_graph(&radius_all(&m, 8.0).unwrap(), m.vocab()).unwrap();
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn induction_rejects_wrong_tables() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let knn = knn_all(&m, 1).unwrap();
        let rad = radius_all(&m, 2.0).unwrap();
        assert!(induce_knn_graph(&rad, m.vocab()).is_err());
        assert!(induce_proximity_graph(&knn, m.vocab()).is_err());
        let partial = knn_for_queries(&m, &[0], 1).unwrap();
        assert!(induce_knn_graph(&partial, m.vocab()).is_err());
        assert!(induce_knn_graph(&knn, &Vocabulary::synthetic(3)).is_err());
    }

    #[test]
    fn ego_fixture() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let g = induce_ego_graph(&knn_for_queries(&m, &[0], 2).unwrap(), m.vocab()).unwrap();
        assert_eq!(g.ids(), [0, 1, 2]);
        assert_eq!(edge_vec(&g), [(0, 1), (0, 2)]);

        let all = knn_all(&m, 2).unwrap();
        assert_eq!(
            induce_ego_graph(&all, m.vocab()).unwrap(),
            induce_knn_graph(&all, m.vocab()).unwrap()
        );
    }

    #[test]
    fn component_fixtures() {
        let g = UndirectedGraph::with_nodes(7, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        let c = components(&g);
        assert_eq!(c.sizes, [3, 3, 1]);
        assert_eq!(c.labels, [0, 0, 0, 1, 1, 1, 2]);

        let empty = UndirectedGraph::with_nodes(4, []).unwrap();
        assert_eq!(components(&empty).sizes, [1, 1, 1, 1]);

        let path = UndirectedGraph::with_nodes(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(components(&path).sizes, [4]);
        assert_eq!(giant_component(&path).unwrap(), path);
    }

    #[test]
    fn giant_component_picks_largest() {
        let mut edges: Vec<(usize, usize)> = (0..2).map(|i| (i, i + 1)).collect();
        edges.extend((3..9).map(|i| (i, i + 1)));
        let g = UndirectedGraph::with_nodes(10, edges).unwrap();
        let gcc = giant_component(&g).unwrap();
        assert_eq!((gcc.node_count(), gcc.edge_count()), (7, 6));
        assert_eq!(gcc.ids(), [3, 4, 5, 6, 7, 8, 9]);
        assert!(giant_component(&UndirectedGraph::with_nodes(0, []).unwrap()).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = UndirectedGraph::from_edges(
            vec![0, 1, 2],
            vec!["the".into(), "of".into(), "and".into()],
            [(2, 0), (0, 1), (1, 0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "the\tof\nthe\tand\n");
        let back = read_edge_list(buf.as_slice()).unwrap();
        assert_eq!((back.node_count(), back.edge_count()), (3, 2));
        assert!(read_edge_list("a\ta\n".as_bytes()).is_err());
        assert!(read_edge_list("a b\n".as_bytes()).is_err());
    }
}
