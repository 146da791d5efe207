//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use langnet::{EmbeddingMatrix, UndirectedGraph, Vocabulary};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(-1.0, 1.0);
    let data = (0..n * dim).map(|_| unit.sample(&mut rng)).collect();
    EmbeddingMatrix::new(Vocabulary::synthetic(n), dim, data, "random").unwrap()
}

/// Points on a coarse integer grid, so exact distance ties are common.
pub fn gridded_matrix(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim).map(|_| rng.gen_range(0..4) as f64).collect();
    EmbeddingMatrix::new(Vocabulary::synthetic(n), dim, data, "grid").unwrap()
}

pub fn line(points: &[f64]) -> EmbeddingMatrix {
    EmbeddingMatrix::new(Vocabulary::synthetic(points.len()), 1, points.to_vec(), "line").unwrap()
}

/// Term-by-term Euclidean distance.
pub fn naive_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.len() {
        sum += (x[i] - y[i]) * (x[i] - y[i]);
    }
    sum.sqrt()
}

/// Two-pass mean and population standard deviation.
pub fn two_pass_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Exact discrete power-law sampler, P(d) ∝ d^(−alpha) for d ≥ x_min, by
/// inverse CDF over a tabulated support. Mass beyond the table is sampled
/// from the midpoint-rounded continuous tail.
pub fn discrete_power_law(alpha: f64, x_min: usize, count: usize, seed: u64) -> Vec<usize> {
    const TABLE: usize = 1_000_000;
    let weights: Vec<f64> = (x_min..x_min + TABLE).map(|d| (d as f64).powf(-alpha)).collect();
    let end = (x_min + TABLE) as f64 - 0.5;
    let tail_mass = end.powf(1.0 - alpha) / (alpha - 1.0);
    let total: f64 = weights.iter().sum::<f64>() + tail_mass;
    let mut cdf = Vec::with_capacity(TABLE);
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            let pos = cdf.partition_point(|&c| c < u);
            if pos < TABLE {
                x_min + pos
            } else {
                let v: f64 = rng.gen();
                (end * (1.0 - v).powf(-1.0 / (alpha - 1.0)) + 0.5).floor() as usize
            }
        })
        .collect()
}

/// Dense power iteration on the column-stochastic Google matrix.
pub fn dense_pagerank(g: &UndirectedGraph, damping: f64, iterations: usize) -> Vec<f64> {
    let n = g.node_count();
    let mut matrix = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in 0..n {
            let link = if g.degree(u) == 0 {
                1.0 / n as f64
            } else if g.has_edge(u, v) {
                1.0 / g.degree(u) as f64
            } else {
                0.0
            };
            matrix[v][u] = damping * link + (1.0 - damping) / n as f64;
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..iterations {
        x = matrix
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
    }
    x
}

/// All-pairs BFS path length, written independently of the library.
pub fn brute_force_path_length(g: &UndirectedGraph) -> f64 {
    let n = g.node_count();
    let mut total = 0u64;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut frontier = vec![s];
        let mut level = 0;
        while !frontier.is_empty() {
            level += 1;
            let mut next = Vec::new();
            for v in frontier {
                for &u in g.neighbors(v) {
                    if dist[u] == usize::MAX {
                        dist[u] = level;
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        assert!(dist.iter().all(|&d| d != usize::MAX), "disconnected");
        total += dist.iter().map(|&d| d as u64).sum::<u64>();
    }
    total as f64 / (n * (n - 1)) as f64
}
