mod common;

use langnet::neighbors::{
    euclidean_distance, knn_all, knn_for_queries, knn_oracle, radius_all, squared_distance,
};
use proptest::prelude::*;

use common::{gridded_matrix, naive_distance, random_matrix};

#[test]
fn distance_matches_naive_summation() {
    let m = random_matrix(40, 64, 3);
    for i in 0..20 {
        let (x, y) = (m.row(i), m.row(39 - i));
        let fast = euclidean_distance(x, y).unwrap();
        let slow = naive_distance(x, y);
        assert!(((fast - slow) / slow).abs() < 1e-12, "{fast} vs {slow}");
    }
}

#[test]
fn knn_agrees_with_oracle() {
    let m = random_matrix(200, 12, 4);
    for k in [1, 2, 5, 20] {
        assert_eq!(knn_all(&m, k).unwrap(), knn_oracle(&m, k).unwrap(), "k={k}");
    }
    let grid = gridded_matrix(150, 2, 5);
    for k in [1, 7, 30] {
        assert_eq!(knn_all(&grid, k).unwrap(), knn_oracle(&grid, k).unwrap(), "grid k={k}");
    }
}

#[test]
fn table_invariants() {
    let m = gridded_matrix(120, 3, 6);
    let t = knn_all(&m, 9).unwrap();
    for (q, list) in t.iter() {
        assert_eq!(list.len(), 9);
        assert!(list.iter().all(|n| n.index != q && n.distance >= 0.0));
        assert!(list.windows(2).all(|w| (w[0].squared, w[0].index) < (w[1].squared, w[1].index)));
    }
    let r = radius_all(&m, 1.5).unwrap();
    for (q, list) in r.iter() {
        let expected = (0..m.n())
            .filter(|&c| c != q && squared_distance(m.row(q), m.row(c)) < 2.25)
            .count();
        assert_eq!(list.len(), expected);
    }
}

#[test]
fn queries_use_the_full_pool() {
    let m = random_matrix(300, 8, 7);
    let all = knn_all(&m, 6).unwrap();
    let sub = knn_for_queries(&m, &[250, 3, 17], 6).unwrap();
    for (q, list) in sub.iter() {
        assert_eq!(list, &all.lists()[q][..]);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let m = random_matrix(700, 24, 8);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (knn_all(&m, 11).unwrap(), radius_all(&m, 1.9).unwrap()))
    };
    assert_eq!(run(1), run(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_symmetry_and_triangle(
        x in prop::collection::vec(-10.0f64..10.0, 6),
        y in prop::collection::vec(-10.0f64..10.0, 6),
        z in prop::collection::vec(-10.0f64..10.0, 6),
    ) {
        let dxy = euclidean_distance(&x, &y).unwrap();
        prop_assert_eq!(dxy, euclidean_distance(&y, &x).unwrap());
        let dxz = euclidean_distance(&x, &z).unwrap();
        let dzy = euclidean_distance(&z, &y).unwrap();
        prop_assert!(dxy <= dxz + dzy + 1e-9);
    }

    #[test]
    fn knn_lists_are_prefixes(seed in 0u64..1000, k in 1usize..8, extra in 1usize..8) {
        let m = gridded_matrix(40, 2, seed);
        let small = knn_all(&m, k).unwrap();
        let large = knn_all(&m, k + extra).unwrap();
        for (a, b) in small.lists().iter().zip(large.lists()) {
            prop_assert_eq!(&a[..], &b[..k]);
        }
    }

    #[test]
    fn radius_is_monotone(seed in 0u64..1000, d in 0.1f64..2.0, grow in 0.0f64..1.0) {
        let m = random_matrix(50, 3, seed);
        let a = radius_all(&m, d).unwrap();
        let b = radius_all(&m, d + grow).unwrap();
        for (la, lb) in a.lists().iter().zip(b.lists()) {
            prop_assert!(la.iter().all(|n| lb.iter().any(|x| x.index == n.index)));
        }
    }
}
