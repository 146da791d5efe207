//! Exact Euclidean neighbor search.
//!
//! All rankings compare squared distances under the total order
//! `(squared distance, neighbor index)`, so ties always resolve to the lower
//! index and results do not depend on how queries are split across threads.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

const QUERY_BLOCK: usize = 16;
const CANDIDATE_BLOCK: usize = 512;

/// One entry of a neighbor list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    /// Euclidean distance (square root of `squared`).
    pub distance: f64,
    pub squared: f64,
}

impl Neighbor {
    fn new(index: usize, squared: f64) -> Self {
        Neighbor {
            index,
            distance: squared.sqrt(),
            squared,
        }
    }

    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.squared
            .total_cmp(&other.squared)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QueryMode {
    Knn(usize),
    Radius(f64),
}

/// Ascending neighbor lists for a set of query rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    mode: QueryMode,
    num_points: usize,
    queries: Vec<usize>,
    lists: Vec<Vec<Neighbor>>,
}

impl NeighborTable {
    pub fn mode(&self) -> QueryMode {
        self.mode
    }

    /// Size of the candidate pool the table was computed over.
    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn queries(&self) -> &[usize] {
        &self.queries
    }

    pub fn lists(&self) -> &[Vec<Neighbor>] {
        &self.lists
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[Neighbor])> {
        self.queries
            .iter()
            .copied()
            .zip(self.lists.iter().map(Vec::as_slice))
    }

    /// True when every row of the pool is a query, in index order.
    pub fn covers_all_points(&self) -> bool {
        self.queries.len() == self.num_points && self.queries.iter().enumerate().all(|(i, &q)| i == q)
    }

    /// The same table cut down to `k` neighbors per query.
    pub fn truncate_k(&self, k: usize) -> Result<NeighborTable> {
        match self.mode {
            QueryMode::Knn(have) if k >= 1 && k <= have => Ok(NeighborTable {
                mode: QueryMode::Knn(k),
                num_points: self.num_points,
                queries: self.queries.clone(),
                lists: self.lists.iter().map(|l| l[..k.min(l.len())].to_vec()).collect(),
            }),
            QueryMode::Knn(have) => Err(Error::invalid(format!(
                "cannot truncate a {have}-NN table to k = {k}"
            ))),
            QueryMode::Radius(_) => Err(Error::invalid("truncate_k needs a k-NN table")),
        }
    }

    /// The same table restricted to neighbors strictly closer than `d`.
    pub fn within_radius(&self, d: f64) -> Result<NeighborTable> {
        check_radius(d)?;
        if let QueryMode::Radius(have) = self.mode {
            if d > have {
                return Err(Error::invalid(format!(
                    "cannot widen a radius-{have} table to {d}"
                )));
            }
        }
        let limit = d * d;
        Ok(NeighborTable {
            mode: QueryMode::Radius(d),
            num_points: self.num_points,
            queries: self.queries.clone(),
            lists: self
                .lists
                .iter()
                .map(|l| l.iter().take_while(|n| n.squared < limit).copied().collect())
                .collect(),
        })
    }
}

/// Squared Euclidean distance of two equal-length slices.
#[inline]
pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [0.0f64; 4];
    let xs = x.chunks_exact(4);
    let ys = y.chunks_exact(4);
    let (xr, yr) = (xs.remainder(), ys.remainder());
    for (a, b) in xs.zip(ys) {
        for lane in 0..4 {
            let d = a[lane] - b[lane];
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0;
    for (a, b) in xr.iter().zip(yr) {
        let d = a - b;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(squared_distance(x, y).sqrt())
}

fn check_k(m: &EmbeddingMatrix, k: usize) -> Result<()> {
    if k == 0 || k >= m.n() {
        return Err(Error::invalid(format!(
            "k = {k} out of range 1..={} for {} points",
            m.n().saturating_sub(1),
            m.n()
        )));
    }
    Ok(())
}

fn check_radius(d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {d}")));
    }
    Ok(())
}

/// Bounded best-k list kept sorted ascending by rank.
struct TopK {
    k: usize,
    items: Vec<Neighbor>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn worst(&self) -> Option<&Neighbor> {
        if self.items.len() < self.k {
            None
        } else {
            self.items.last()
        }
    }

    #[inline]
    fn offer(&mut self, index: usize, squared: f64) {
        let cand = Neighbor {
            index,
            distance: 0.0,
            squared,
        };
        if let Some(w) = self.worst() {
            if cand.rank_cmp(w) != Ordering::Less {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|n| n.rank_cmp(&cand) == Ordering::Less);
        self.items.insert(pos, cand);
        self.items.truncate(self.k);
    }

    fn finish(self) -> Vec<Neighbor> {
        self.items
            .into_iter()
            .map(|n| Neighbor::new(n.index, n.squared))
            .collect()
    }
}

/// Blocked scan: each block of queries sweeps the candidate rows in tiles so
/// the candidate tile stays cache-resident across the query block.
fn knn_blocked(m: &EmbeddingMatrix, queries: &[usize], k: usize) -> Vec<Vec<Neighbor>> {
    let n = m.n();
    queries
        .par_chunks(QUERY_BLOCK)
        .flat_map_iter(|block| {
            let mut best: Vec<TopK> = block.iter().map(|_| TopK::new(k)).collect();
            for start in (0..n).step_by(CANDIDATE_BLOCK) {
                let end = (start + CANDIDATE_BLOCK).min(n);
                for (slot, &q) in best.iter_mut().zip(block) {
                    let qrow = m.row(q);
                    for c in start..end {
                        if c == q {
                            continue;
                        }
                        let sq = squared_distance(qrow, m.row(c));
                        slot.offer(c, sq);
                    }
                }
            }
            best.into_iter().map(TopK::finish)
        })
        .collect()
}

/// k nearest other rows for every row.
pub fn knn_all(m: &EmbeddingMatrix, k: usize) -> Result<NeighborTable> {
    check_k(m, k)?;
    let queries: Vec<usize> = (0..m.n()).collect();
    let lists = knn_blocked(m, &queries, k);
    Ok(NeighborTable {
        mode: QueryMode::Knn(k),
        num_points: m.n(),
        queries,
        lists,
    })
}

/// k nearest rows for a subset of queries; candidates range over all of `m`.
/// Duplicate query indices are dropped, keeping first occurrence order.
pub fn knn_for_queries(m: &EmbeddingMatrix, queries: &[usize], k: usize) -> Result<NeighborTable> {
    check_k(m, k)?;
    let mut seen = vec![false; m.n()];
    let mut unique = Vec::with_capacity(queries.len());
    for &q in queries {
        if q >= m.n() {
            return Err(Error::invalid(format!(
                "query index {q} out of range for {} points",
                m.n()
            )));
        }
        if !std::mem::replace(&mut seen[q], true) {
            unique.push(q);
        }
    }
    let lists = knn_blocked(m, &unique, k);
    Ok(NeighborTable {
        mode: QueryMode::Knn(k),
        num_points: m.n(),
        queries: unique,
        lists,
    })
}

/// All other rows at distance strictly below `d`, for every row.
pub fn radius_all(m: &EmbeddingMatrix, d: f64) -> Result<NeighborTable> {
    check_radius(d)?;
    let limit = d * d;
    let n = m.n();
    let lists = (0..n)
        .into_par_iter()
        .map(|q| {
            let qrow = m.row(q);
            let mut hits: Vec<Neighbor> = (0..n)
                .filter(|&c| c != q)
                .filter_map(|c| {
                    let sq = squared_distance(qrow, m.row(c));
                    (sq < limit).then(|| Neighbor::new(c, sq))
                })
                .collect();
            hits.sort_by(Neighbor::rank_cmp);
            hits
        })
        .collect();
    Ok(NeighborTable {
        mode: QueryMode::Radius(d),
        num_points: n,
        queries: (0..n).collect(),
        lists,
    })
}

/// Reference k-NN: full sort of every pairwise distance, single-threaded.
pub fn knn_oracle(m: &EmbeddingMatrix, k: usize) -> Result<NeighborTable> {
    check_k(m, k)?;
    let n = m.n();
    let mut lists = Vec::with_capacity(n);
    for q in 0..n {
        let mut all: Vec<Neighbor> = (0..n)
            .filter(|&c| c != q)
            .map(|c| Neighbor::new(c, squared_distance(m.row(q), m.row(c))))
            .collect();
        all.sort_by(Neighbor::rank_cmp);
        all.truncate(k);
        lists.push(all);
    }
    Ok(NeighborTable {
        mode: QueryMode::Knn(k),
        num_points: n,
        queries: (0..n).collect(),
        lists,
    })
}

/// TSV dump: `query_token`, `neighbor_token`, `distance` with a header line.
pub fn write_neighbor_tsv<W: Write>(
    nt: &NeighborTable,
    vocab: &crate::embedding::Vocabulary,
    mut w: W,
) -> Result<()> {
    writeln!(w, "query_token\tneighbor_token\tdistance")?;
    for (q, list) in nt.iter() {
        for nb in list {
            writeln!(
                w,
                "{}\t{}\t{:.6}",
                vocab.token(q),
                vocab.token(nb.index),
                nb.distance
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Vocabulary;

    fn line(points: &[f64]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(Vocabulary::synthetic(points.len()), 1, points.to_vec(), "line").unwrap()
    }

    fn indices(list: &[Neighbor]) -> Vec<usize> {
        list.iter().map(|n| n.index).collect()
    }

    #[test]
    fn distance_basics() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(
            euclidean_distance(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn one_nn_on_the_line() {
        let nt = knn_all(&line(&[0.0, 1.0, 3.0, 7.0]), 1).unwrap();
        let nn: Vec<usize> = nt.lists().iter().map(|l| l[0].index).collect();
        assert_eq!(nn, [1, 0, 1, 2]);
        assert_eq!(nt.lists()[3][0].distance, 4.0);
    }

    #[test]
    fn exhaustive_k_lists_everything() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let nt = knn_all(&m, 3).unwrap();
        assert_eq!(indices(&nt.lists()[2]), [1, 0, 3]);
        assert_eq!(nt, knn_oracle(&m, 3).unwrap());
    }

    #[test]
    fn k_out_of_range() {
        let m = line(&[0.0, 1.0, 3.0]);
        assert!(knn_all(&m, 0).is_err());
        assert!(knn_all(&m, 3).is_err());
        assert!(knn_oracle(&m, 3).is_err());
        assert!(knn_for_queries(&m, &[0], 3).is_err());
    }

    #[test]
    fn radius_on_the_line() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let nt = radius_all(&m, 2.5).unwrap();
        assert_eq!(indices(&nt.lists()[0]), [1]);
        assert_eq!(indices(&nt.lists()[1]), [0, 2]);
        assert_eq!(indices(&nt.lists()[2]), [1]);
        assert!(nt.lists()[3].is_empty());
        // strict inequality: exactly-2 pair excluded at d = 2
        let nt = radius_all(&m, 2.0).unwrap();
        assert_eq!(indices(&nt.lists()[1]), [0]);
        assert!(radius_all(&m, 0.5).unwrap().lists().iter().all(Vec::is_empty));
        assert!(radius_all(&m, 7.5).unwrap().lists().iter().all(|l| l.len() == 3));
        assert!(radius_all(&m, 0.0).is_err());
    }

    #[test]
    fn query_subset() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let nt = knn_for_queries(&m, &[3], 2).unwrap();
        assert_eq!(nt.queries(), [3]);
        let l = &nt.lists()[0];
        assert_eq!(indices(l), [2, 1]);
        assert_eq!((l[0].distance, l[1].distance), (4.0, 6.0));
        assert!(knn_for_queries(&m, &[4], 1).is_err());
        assert_eq!(knn_for_queries(&m, &[0, 1, 2, 3], 2).unwrap(), knn_all(&m, 2).unwrap());
        assert_eq!(knn_for_queries(&m, &[1, 1, 0], 1).unwrap().queries(), [1, 0]);
    }

    #[test]
    fn two_points_and_duplicates() {
        let nt = knn_oracle(&line(&[0.0, 5.0]), 1).unwrap();
        assert_eq!(indices(&nt.lists()[0]), [1]);
        assert_eq!(indices(&nt.lists()[1]), [0]);

        let m = line(&[2.0, 0.0, 2.0, 2.0]);
        let nt = knn_all(&m, 2).unwrap();
        assert_eq!(indices(&nt.lists()[0]), [2, 3]);
        assert_eq!(indices(&nt.lists()[3]), [0, 2]);
        assert_eq!(nt, knn_oracle(&m, 2).unwrap());
    }

    #[test]
    fn truncation_and_radius_filter() {
        let m = line(&[0.0, 1.0, 3.0, 7.0, 8.0]);
        let wide = knn_all(&m, 4).unwrap();
        assert_eq!(wide.truncate_k(2).unwrap(), knn_all(&m, 2).unwrap());
        assert!(wide.truncate_k(5).is_err());
        let r = radius_all(&m, 6.0).unwrap();
        assert_eq!(r.within_radius(2.0).unwrap(), radius_all(&m, 2.0).unwrap());
        assert!(r.within_radius(7.0).is_err());
    }

    #[test]
    fn tsv_dump() {
        let m = line(&[0.0, 1.0, 3.0]);
        let mut out = Vec::new();
        write_neighbor_tsv(&knn_all(&m, 1).unwrap(), m.vocab(), &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "query_token\tneighbor_token\tdistance\nw0\tw1\t1.000000\nw1\tw0\t1.000000\nw2\tw1\t2.000000\n"
        );
    }
}
